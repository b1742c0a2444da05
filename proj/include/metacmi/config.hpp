#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "metacmi/rational.hpp"

namespace metacmi {

/**
 * Flat key = value configuration text. Lines are `key = value`, `#` starts a
 * comment, lists are comma-separated (optionally bracketed). Unknown keys are
 * rejected by the consumer so typos fail loudly.
 */
class ConfigMap {
  public:
    static ConfigMap parse_text(std::string_view text, std::string source = "<inline>") {
        ConfigMap cfg;
        cfg.source_ = std::move(source);
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t eol = text.find('\n', pos);
            std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
            pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string_view::npos)
                throw std::invalid_argument(cfg.source_ + ":" + std::to_string(line_no) + ": expected key = value");
            const std::string key(trim(line.substr(0, eq)));
            const std::string value(trim(line.substr(eq + 1)));
            if (key.empty()) throw std::invalid_argument(cfg.source_ + ":" + std::to_string(line_no) + ": empty key");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static ConfigMap parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_text(buf.str(), path);
    }

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
    [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

    [[nodiscard]] std::string get_string(const std::string& key) const { return raw(key); }

    [[nodiscard]] double get_double(const std::string& key) const {
        return parse_double(raw(key), key);
    }

    [[nodiscard]] std::uint64_t get_u64(const std::string& key) const {
        const std::string& v = raw(key);
        try {
            std::size_t used = 0;
            const std::uint64_t out = std::stoull(v, &used);
            if (used != v.size()) throw std::invalid_argument("");
            return out;
        } catch (const std::exception&) {
            throw std::invalid_argument("config key '" + key + "': expected unsigned integer, got '" + v + "'");
        }
    }

    [[nodiscard]] Rational get_rational(const std::string& key) const {
        try {
            return Rational::from_decimal(raw(key));
        } catch (const std::exception&) {
            throw std::invalid_argument("config key '" + key + "': expected decimal value, got '" + raw(key) + "'");
        }
    }

    [[nodiscard]] std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : split_list(raw(key))) out.push_back(parse_double(item, key));
        return out;
    }

    [[nodiscard]] std::vector<std::size_t> get_size_list(const std::string& key) const {
        std::vector<std::size_t> out;
        for (const auto& item : split_list(raw(key))) {
            try {
                std::size_t used = 0;
                out.push_back(std::stoull(item, &used));
                if (used != item.size()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw std::invalid_argument("config key '" + key + "': expected integer list entry, got '" + item + "'");
            }
        }
        return out;
    }

  private:
    [[nodiscard]] const std::string& raw(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw std::invalid_argument("config key '" + key + "' missing in " + source_);
        return it->second;
    }

    static double parse_double(const std::string& v, const std::string& key) {
        try {
            std::size_t used = 0;
            const double out = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument("");
            return out;
        } catch (const std::exception&) {
            throw std::invalid_argument("config key '" + key + "': expected number, got '" + v + "'");
        }
    }

    static std::string_view trim(std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
        return s;
    }

    static std::vector<std::string> split_list(std::string_view value) {
        value = trim(value);
        if (!value.empty() && value.front() == '[' && value.back() == ']') value = trim(value.substr(1, value.size() - 2));
        std::vector<std::string> items;
        std::size_t pos = 0;
        while (pos <= value.size()) {
            const std::size_t comma = value.find(',', pos);
            const std::string_view item =
                trim(value.substr(pos, comma == std::string_view::npos ? value.size() - pos : comma - pos));
            if (!item.empty()) items.emplace_back(item);
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        return items;
    }

    std::string source_;
    std::map<std::string, std::string> values_;
};

}  // namespace metacmi
