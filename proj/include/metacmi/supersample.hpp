#pragma once

#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "metacmi/environment.hpp"
#include "metacmi/random.hpp"

namespace metacmi {

/**
 * Meta-supersample: 2N per-task supersamples of 2M binary entries each,
 * stored as a (2N x 2M) matrix, together with the 2N task ids whose
 * distributions generated the rows.
 */
struct MetaSupersample {
    std::size_t n = 0;  // number of meta-training tasks N
    std::size_t m = 0;  // number of training samples per task M
    std::vector<std::uint8_t> data;   // row-major, 2n rows x 2m columns
    std::vector<TaskId> row_tasks;    // length 2n

    MetaSupersample() = default;

    MetaSupersample(std::size_t n_, std::size_t m_, std::vector<std::uint8_t> entries, std::vector<TaskId> tasks)
        : n(n_), m(m_), data(std::move(entries)), row_tasks(std::move(tasks)) {
        if (n == 0 || m == 0) throw std::invalid_argument("MetaSupersample: n and m must be positive");
        if (data.size() != 4 * n * m) throw std::invalid_argument("MetaSupersample: data must be 2N x 2M");
        if (row_tasks.size() != 2 * n) throw std::invalid_argument("MetaSupersample: need 2N row tasks");
        for (auto v : data)
            if (v > 1) throw std::invalid_argument("MetaSupersample: entries must be 0/1");
    }

    [[nodiscard]] std::size_t rows() const { return 2 * n; }
    [[nodiscard]] std::size_t cols() const { return 2 * m; }

    [[nodiscard]] std::span<const std::uint8_t> row(std::size_t i) const {
        if (i >= rows()) throw std::out_of_range("MetaSupersample::row: index out of range");
        return {data.data() + i * cols(), cols()};
    }
};

/**
 * Selection variables: the environment-level bit vector R (length N) and the
 * per-task bit matrix S (N x M). All bits fair and independent by sampling.
 */
struct Selection {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<std::uint8_t> r;  // length n
    std::vector<std::uint8_t> s;  // row-major, n x m

    Selection() = default;

    Selection(std::size_t n_, std::size_t m_, std::vector<std::uint8_t> r_, std::vector<std::uint8_t> s_)
        : n(n_), m(m_), r(std::move(r_)), s(std::move(s_)) {
        if (r.size() != n || s.size() != n * m) throw std::invalid_argument("Selection: shape mismatch");
        for (auto v : r)
            if (v > 1) throw std::invalid_argument("Selection: bits must be 0/1");
        for (auto v : s)
            if (v > 1) throw std::invalid_argument("Selection: bits must be 0/1");
    }

    [[nodiscard]] std::span<const std::uint8_t> s_row(std::size_t i) const {
        if (i >= n) throw std::out_of_range("Selection::s_row: index out of range");
        return {s.data() + i * m, m};
    }

    /// Modulo-2 complement of every bit (both R and S).
    [[nodiscard]] Selection complement() const {
        Selection c = *this;
        for (auto& v : c.r) v ^= 1;
        for (auto& v : c.s) v ^= 1;
        return c;
    }
};

inline MetaSupersample build_meta_supersample(const TaskEnvironment& env, std::size_t n, std::size_t m,
                                              RandomStream& rng) {
    if (n == 0 || m == 0) throw std::invalid_argument("build_meta_supersample: n and m must be positive");
    MetaSupersample ss;
    ss.n = n;
    ss.m = m;
    ss.row_tasks.resize(2 * n);
    ss.data.resize(4 * n * m);
    for (std::size_t i = 0; i < 2 * n; ++i) {
        const TaskId t = sample_task(env, rng);
        ss.row_tasks[i] = t;
        const double mu = env.task_mean(t);
        for (std::size_t j = 0; j < 2 * m; ++j) ss.data[i * 2 * m + j] = rng.bernoulli(mu) ? 1 : 0;
    }
    return ss;
}

inline Selection sample_selection(std::size_t n, std::size_t m, RandomStream& rng) {
    Selection sel;
    sel.n = n;
    sel.m = m;
    sel.r.resize(n);
    sel.s.resize(n * m);
    for (auto& b : sel.r) b = rng.fair_bit();
    for (auto& b : sel.s) b = rng.fair_bit();
    return sel;
}

/**
 * Row selected for meta-training task i by bit r_i, in the paper's 1-based
 * convention: row i + r_i * N.
 */
inline std::size_t training_row_index(std::size_t i, std::uint8_t r_i, std::size_t n) {
    if (i < 1 || i > n) throw std::out_of_range("training_row_index: i must be in 1..N");
    if (r_i > 1) throw std::invalid_argument("training_row_index: bit must be 0/1");
    return i + static_cast<std::size_t>(r_i) * n;
}

/// 0-based variant used internally: row (i) + r_i * n for i in [0, n).
inline std::size_t training_row_index0(std::size_t i, std::uint8_t r_i, std::size_t n) {
    if (i >= n) throw std::out_of_range("training_row_index0: i must be in [0, N)");
    return i + static_cast<std::size_t>(r_i) * n;
}

/// 0-based column picked by bit s_j at position j: j + m * s_j.
inline std::size_t selected_column0(std::size_t j, std::uint8_t s_j, std::size_t m) { return j + m * s_j; }

/**
 * Pick the M training entries out of a 2M-entry row: element j of the result
 * is row[j + M * s_j].
 */
inline Dataset select_samples(std::span<const std::uint8_t> row, std::span<const std::uint8_t> s_bits) {
    const std::size_t m = s_bits.size();
    if (row.size() != 2 * m) throw std::invalid_argument("select_samples: row must have length 2M");
    Dataset d;
    d.samples.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        if (s_bits[j] > 1) throw std::invalid_argument("select_samples: bits must be 0/1");
        d.samples[j] = row[selected_column0(j, s_bits[j], m)];
    }
    return d;
}

/// The N meta-training datasets picked from the supersample by (R, S).
inline std::vector<Dataset> meta_training_set(const MetaSupersample& ss, const Selection& sel) {
    if (sel.n != ss.n || sel.m != ss.m) throw std::invalid_argument("meta_training_set: shape mismatch");
    std::vector<Dataset> out;
    out.reserve(ss.n);
    for (std::size_t i = 0; i < ss.n; ++i)
        out.push_back(select_samples(ss.row(training_row_index0(i, sel.r[i], ss.n)), sel.s_row(i)));
    return out;
}

/**
 * Plain-text rendering of the supersample with the cells picked by (R, S)
 * bracketed, one matrix row per line. Debug/test aid only.
 */
inline std::string dump_with_selection(const MetaSupersample& ss, const Selection& sel) {
    if (sel.n != ss.n || sel.m != ss.m) throw std::invalid_argument("dump_with_selection: shape mismatch");
    std::vector<std::vector<bool>> mark(ss.rows(), std::vector<bool>(ss.cols(), false));
    for (std::size_t i = 0; i < ss.n; ++i) {
        const std::size_t row = training_row_index0(i, sel.r[i], ss.n);
        for (std::size_t j = 0; j < ss.m; ++j) mark[row][selected_column0(j, sel.s_row(i)[j], ss.m)] = true;
    }
    std::ostringstream os;
    for (std::size_t i = 0; i < ss.rows(); ++i) {
        os << "task " << ss.row_tasks[i] << " |";
        for (std::size_t j = 0; j < ss.cols(); ++j) {
            const char v = ss.row(i)[j] ? '1' : '0';
            if (mark[i][j])
                os << " [" << v << ']';
            else
                os << "  " << v << ' ';
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace metacmi
