#pragma once

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "supct/geometry.hpp"
#include "supct/image.hpp"
#include "supct/run_record.hpp"

namespace supct {

/// Ordered subsets of equally spaced views: subset w holds views w, w+W, w+2W, ...
struct SubsetPartition {
    std::size_t num_views = 0;
    std::vector<std::vector<std::size_t>> subsets;

    std::size_t num_subsets() const { return subsets.size(); }
};

inline SubsetPartition partition_subsets(std::size_t num_views, std::size_t num_subsets) {
    if (num_subsets < 1 || num_subsets > num_views)
        throw std::invalid_argument("partition_subsets: need 1 <= W <= num_views (W=" +
                                    std::to_string(num_subsets) + ", views=" + std::to_string(num_views) + ")");
    SubsetPartition p;
    p.num_views = num_views;
    p.subsets.resize(num_subsets);
    for (std::size_t w = 0; w < num_subsets; ++w)
        for (std::size_t v = w; v < num_views; v += num_subsets) p.subsets[w].push_back(v);
    return p;
}

struct BasicAlgorithmConfig {
    double relaxation = 1.0;
    std::size_t num_subsets = 10;
    bool nonneg_projection = true;

    void validate(std::size_t num_views) const {
        if (!(relaxation > 0.0 && relaxation < 2.0))
            throw std::invalid_argument("BasicAlgorithmConfig: relaxation must lie in (0, 2)");
        if (num_subsets < 1 || num_subsets > num_views)
            throw std::invalid_argument("BasicAlgorithmConfig: need 1 <= num_subsets <= num_views");
    }
};

/// A feasibility-seeking operator P_T together with its proximity function.
template <class B>
concept BasicAlgorithm = requires(const B& b, const Image& x) {
    { b.apply(x) } -> std::same_as<Image>;
    { b.proximity(x) } -> std::convertible_to<double>;
};

/// ||Ax - b||_2.
template <LinearProjector Op>
double proximity(const Op& op, const Image& x, const Sinogram& data) {
    if (data.num_views() != op.num_views() || data.num_bins() != op.num_bins())
        throw DimensionError("proximity: data shape does not match projector");
    const Sinogram ax = forward_project(op, x);
    double s = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) {
        const double r = ax[i] - data[i];
        s += r * r;
    }
    return std::sqrt(s);
}

/// Block-iterative SART (OS-SIRT): B_W ... B_1 followed by the nonnegativity
/// projection. D and M for every subset are computed once at construction;
/// zero row or column sums give zero weights. The projector must outlive this object.
template <LinearProjector Op>
class BiSart {
public:
    BiSart(const Op& op, Sinogram data, BasicAlgorithmConfig cfg)
        : BiSart(op, std::move(data), partition_subsets(op.num_views(), cfg.num_subsets), cfg) {}

    BiSart(const Op& op, Sinogram data, SubsetPartition partition, BasicAlgorithmConfig cfg)
        : op_(op), data_(std::move(data)), partition_(std::move(partition)), cfg_(cfg) {
        cfg_.validate(op_.num_views());
        if (data_.num_views() != op_.num_views() || data_.num_bins() != op_.num_bins())
            throw DimensionError("BiSart: data is " + std::to_string(data_.num_views()) + "x" +
                                 std::to_string(data_.num_bins()) + ", projector expects " +
                                 std::to_string(op_.num_views()) + "x" + std::to_string(op_.num_bins()));
        if (partition_.num_views != op_.num_views() || partition_.num_subsets() != cfg_.num_subsets)
            throw DimensionError("BiSart: partition does not match projector/config");
        blocks_.reserve(partition_.num_subsets());
        for (const auto& views : partition_.subsets) {
            Block blk;
            blk.views = views;
            auto sums = row_col_sums(op_, std::span<const std::size_t>(views));
            blk.inv_row = std::move(sums.row_sums);
            for (double& v : blk.inv_row.values()) v = v > 0.0 ? 1.0 / v : 0.0;
            blk.inv_col = std::move(sums.col_sums);
            for (double& v : blk.inv_col.values()) v = v > 0.0 ? 1.0 / v : 0.0;
            blk.data = Sinogram(views.size(), op_.num_bins());
            for (std::size_t i = 0; i < views.size(); ++i) {
                const auto src = data_.view(views[i]);
                std::copy(src.begin(), src.end(), blk.data.view(i).begin());
            }
            blocks_.push_back(std::move(blk));
        }
    }

    const Op& projector() const { return op_; }
    const Sinogram& data() const { return data_; }
    const SubsetPartition& partition() const { return partition_; }
    const BasicAlgorithmConfig& config() const { return cfg_; }

    /// One full sweep P_T(x).
    Image apply(const Image& x) const {
        if (x.rows() != op_.image_rows() || x.cols() != op_.image_cols())
            throw DimensionError("BiSart::apply: image shape does not match projector");
        Image cur = x;
        for (const auto& blk : blocks_) {
            Sinogram r = op_.forward(cur, blk.views);
            for (std::size_t i = 0; i < r.size(); ++i) r[i] = (r[i] - blk.data[i]) * blk.inv_row[i];
            const Image g = op_.back(r, blk.views);
            for (std::size_t j = 0; j < cur.size(); ++j) cur[j] -= cfg_.relaxation * blk.inv_col[j] * g[j];
        }
        if (cfg_.nonneg_projection) clamp_nonnegative(cur);
        return cur;
    }

    double proximity(const Image& x) const { return supct::proximity(op_, x, data_); }

private:
    struct Block {
        std::vector<std::size_t> views;
        Sinogram data;
        Sinogram inv_row;
        Image inv_col;
    };

    const Op& op_;
    Sinogram data_;
    SubsetPartition partition_;
    BasicAlgorithmConfig cfg_;
    std::vector<Block> blocks_;
};

template <LinearProjector Op>
Image bisart_apply(const Op& op, const Image& x, const Sinogram& data, const SubsetPartition& partition,
                   const BasicAlgorithmConfig& cfg) {
    return BiSart<Op>(op, data, partition, cfg).apply(x);
}

/// Runs a fixed number of basic-algorithm sweeps. The final proximity is the
/// epsilon target used by superiorized runs.
template <BasicAlgorithm B>
RunRecord run_basic(const B& basic, const Image& x0, std::size_t iterations, const RunOptions& opt = {}) {
    if (iterations < 1) throw std::invalid_argument("run_basic: iterations must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.variant = "basic";
    rec.status = Termination::completed;
    Image x = x0;
    for (std::size_t k = 1; k <= iterations; ++k) {
        x = basic.apply(x);
        rec.rows.push_back(detail::make_row(k, x, basic.proximity(x), opt));
        if (opt.observer) opt.observer(k, x);
    }
    rec.final_image = std::move(x);
    rec.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

}  // namespace supct
