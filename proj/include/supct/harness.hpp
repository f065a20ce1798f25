#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "supct/acquisition.hpp"
#include "supct/config.hpp"
#include "supct/denoise.hpp"
#include "supct/geometry.hpp"
#include "supct/metrics.hpp"
#include "supct/penalty.hpp"
#include "supct/phantom.hpp"
#include "supct/raster_io.hpp"
#include "supct/recon.hpp"
#include "supct/run_record.hpp"
#include "supct/superiorize.hpp"

namespace supct {

/// Phantom i of the configured batch. "mixed" puts Shepp-Logan first and
/// random phantoms after it.
inline Image make_phantom(const RunConfig& cfg, std::size_t index) {
    const auto& p = cfg.phantom;
    const bool sl = p.kind == PhantomKind::shepp_logan || (p.kind == PhantomKind::mixed && index == 0);
    if (sl) return shepp_logan(p.side);
    return random_ellipse_phantom(p.side, p.num_ellipses, p.seed + index);
}

struct Acquisition {
    Image phantom;
    Sinogram clean;          // all views, noise-free line integrals
    CountsSinogram counts;   // all views
    Sinogram data;           // log-transformed, subsampled views
    FanBeamGeometry geometry;  // geometry of `data`
    double I0 = 0.0;         // intensity actually simulated
};

inline Acquisition simulate(const RunConfig& cfg, std::size_t index) {
    Acquisition a;
    a.phantom = make_phantom(cfg, index);
    const FanBeamGeometry full = make_geometry(cfg);
    a.clean = JosephProjector(full).forward(a.phantom);
    a.I0 = cfg.dose.effective_I0(cfg.phantom.side);
    a.counts = simulate_counts(a.clean, a.I0, cfg.phantom.seed + index, cfg.dose.noiseless);
    a.data = subsample_views(log_transform(a.counts, a.I0), cfg.dose.keep_every);
    a.geometry = subsample_geometry(full, cfg.dose.keep_every);
    return a;
}

struct CellResult {
    std::size_t index = 0;
    RunRecord record;
    MetricReport report;
};

/// Runs the configured variant on one data set. When the config asks for it,
/// epsilon comes from a basic run of the configured length.
inline CellResult reconstruct(const RunConfig& cfg, const Image& phantom, const Sinogram& data,
                              const FanBeamGeometry& geom, std::size_t index = 0) {
    const auto& alg = cfg.algorithm;
    const JosephProjector op(geom);
    const BiSart<JosephProjector> basic(op, data, alg.basic.cfg);
    const TotalVariation tv{alg.tv};
    const Image zero(geom.num_pixels_per_side, geom.num_pixels_per_side);

    RunOptions opt;
    opt.reference = phantom;
    opt.tv = alg.tv;
    opt.psnr_options = cfg.metrics;

    CellResult cell;
    cell.index = index;
    RunRecord base = run_basic(basic, zero, alg.basic.iterations, opt);
    if (alg.variant == Variant::basic) {
        cell.record = std::move(base);
    } else if (alg.variant == Variant::postprocess) {
        const auto t0 = std::chrono::steady_clock::now();
        Image post = supct::postprocess(base.final_image, SpecDenoiser{alg.denoiser});
        base.runtime_seconds += detail::elapsed_since(t0);
        base.variant = "postprocess";
        base.final_image = std::move(post);
        cell.record = std::move(base);
    } else {
        const SuperiorizedRunConfig run{alg.epsilon.value_or(base.final_proximity()), alg.max_outer_iterations};
        if (alg.variant == Variant::conventional) {
            cell.record = superiorize_conventional(basic, tv, zero, alg.conventional, run, opt);
        } else if (alg.variant == Variant::adaptive) {
            AdaptiveConfig ac;
            ac.noisy_mode = alg.adaptive.noisy_mode;
            if (!alg.adaptive.alpha0 || !alg.adaptive.epsilon_inc) {
                const AdaptiveInit init = adaptive_initial_levels(basic, tv, zero);
                ac.alpha0 = alg.adaptive.alpha0.value_or(init.alpha0);
                ac.epsilon_inc = alg.adaptive.epsilon_inc.value_or(init.epsilon_inc);
            } else {
                ac.alpha0 = *alg.adaptive.alpha0;
                ac.epsilon_inc = *alg.adaptive.epsilon_inc;
            }
            cell.record = superiorize_adaptive(basic, tv, zero, ac, run, opt);
        } else {
            cell.record = superiorize_pnp(basic, SpecDenoiser{alg.denoiser}, zero, alg.pnp, run, opt);
        }
    }
    cell.report = evaluate_image(cell.record.final_image, phantom, alg.tv, cfg.metrics);
    cell.report.proximity = basic.proximity(cell.record.final_image);
    cell.report.iterations = cell.record.iterations();
    cell.report.runtime_seconds = cell.record.runtime_seconds;
    return cell;
}

/// Calls fn(i) for i in [0, n) on up to `threads` workers. The first exception
/// is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// Simulates and reconstructs every phantom of the batch. Results are ordered
/// by phantom index regardless of thread count.
inline std::vector<CellResult> run_batch(const RunConfig& cfg, std::size_t threads = 1) {
    std::vector<CellResult> cells(cfg.phantom.count);
    parallel_for(cfg.phantom.count, threads, [&](std::size_t i) {
        const Acquisition a = simulate(cfg, i);
        cells[i] = reconstruct(cfg, a.phantom, a.data, a.geometry, i);
    });
    return cells;
}

/// True for records of superiorized variants that did not reach epsilon.
inline bool missed_epsilon(const RunRecord& rec) {
    const bool superiorized = rec.variant == "conventional" || rec.variant == "adaptive" || rec.variant == "pnp";
    return superiorized && rec.status != Termination::epsilon_compatible;
}

// ---------------------------------------------------------------------------
// Files

inline std::string cell_stem(const std::string& label, std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "_p%03zu", index);
    return label + buf;
}

inline std::filesystem::path ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create output directory " + dir.string() + (ec ? ": " + ec.message() : ""));
    return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    detail::write_atomically(path, text.data(), text.size());
}

/// phantom_pNNN, clean_pNNN, counts_pNNN and sinogram_pNNN rasters.
inline void write_acquisition(const RunConfig& cfg, const Acquisition& a, std::size_t index,
                              const std::filesystem::path& dir) {
    write_image(dir / (cell_stem("phantom", index) + ".ssrt"), a.phantom);
    write_sinogram(dir / (cell_stem("clean", index) + ".ssrt"), a.clean);
    write_sinogram(dir / (cell_stem("counts", index) + ".ssrt"), a.counts.counts);
    write_sinogram(dir / (cell_stem("sinogram", index) + ".ssrt"), a.data);
    if (cfg.output.export_png) write_png(dir / (cell_stem("phantom", index) + ".png"), a.phantom);
}

inline std::string summary_csv(const std::vector<CellResult>& cells) {
    std::ostringstream os;
    os << "phantom,psnr,ssim,delta_tv_percent,iterations,runtime_seconds,proximity,epsilon,status\n";
    for (const auto& c : cells)
        os << c.index << ',' << detail::format_double(c.report.psnr) << ',' << detail::format_double(c.report.ssim)
           << ',' << detail::format_double(c.report.delta_tv_percent) << ',' << c.report.iterations << ','
           << detail::format_double(c.report.runtime_seconds) << ',' << detail::format_double(c.report.proximity)
           << ',' << detail::format_double(c.record.epsilon) << ',' << to_string(c.record.status) << '\n';
    return os.str();
}

/// Per-cell iteration and perturbation CSVs, final image, and the batch summary.
inline void write_reconstruction(const RunConfig& cfg, const std::vector<CellResult>& cells,
                                 const std::filesystem::path& dir) {
    const std::string label = cfg.algorithm.label();
    for (const auto& c : cells) {
        const std::string stem = cell_stem(label, c.index);
        write_text(dir / (stem + "_iterations.csv"), run_record_csv(c.record));
        write_text(dir / (stem + "_perturbations.csv"), perturbations_csv(c.record));
        write_image(dir / (stem + ".ssrt"), c.record.final_image);
        if (cfg.output.export_png) write_png(dir / (stem + ".png"), c.record.final_image);
    }
    write_text(dir / (label + "_summary.csv"), summary_csv(cells));
    write_text(dir / (label + "_config.json"), to_json(cfg).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Comparison

inline double mean(const std::vector<double>& v) {
    return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample (n - 1) standard deviation; 0 for a single value.
inline double sample_stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

struct MethodSummary {
    std::string label;
    std::size_t phantoms = 0;
    double psnr_mean = 0.0, psnr_std = 0.0;
    double ssim_mean = 0.0, ssim_std = 0.0;
    double delta_tv_mean = 0.0;
    double iterations_mean = 0.0;
    double runtime_mean = 0.0;
    double proximity_mean = 0.0;
    std::size_t epsilon_misses = 0;
};

inline MethodSummary summarize(const std::string& label, const std::vector<CellResult>& cells) {
    MethodSummary s;
    s.label = label;
    s.phantoms = cells.size();
    std::vector<double> p, q, t, it, rt, pr;
    for (const auto& c : cells) {
        p.push_back(c.report.psnr);
        q.push_back(c.report.ssim);
        t.push_back(c.report.delta_tv_percent);
        it.push_back(static_cast<double>(c.report.iterations));
        rt.push_back(c.report.runtime_seconds);
        pr.push_back(c.report.proximity);
        if (missed_epsilon(c.record)) ++s.epsilon_misses;
    }
    s.psnr_mean = mean(p);
    s.psnr_std = sample_stddev(p);
    s.ssim_mean = mean(q);
    s.ssim_std = sample_stddev(q);
    s.delta_tv_mean = mean(t);
    s.iterations_mean = mean(it);
    s.runtime_mean = mean(rt);
    s.proximity_mean = mean(pr);
    return s;
}

/// Which deterministic columns each method leads: highest PSNR and SSIM,
/// smallest |dTV%|, fewest iterations, lowest proximity. Runtime is left out
/// so the marker column stays reproducible.
inline std::vector<std::string> best_markers(const std::vector<MethodSummary>& rows) {
    std::vector<std::string> marks(rows.size());
    auto mark = [&](const char* name, auto key, bool larger_is_better) {
        if (rows.empty()) return;
        double best = key(rows[0]);
        for (const auto& r : rows) best = larger_is_better ? std::max(best, key(r)) : std::min(best, key(r));
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (key(rows[i]) == best) marks[i] += marks[i].empty() ? name : std::string(";") + name;
    };
    mark("psnr", [](const MethodSummary& s) { return s.psnr_mean; }, true);
    mark("ssim", [](const MethodSummary& s) { return s.ssim_mean; }, true);
    mark("dtv", [](const MethodSummary& s) { return std::abs(s.delta_tv_mean); }, false);
    mark("iterations", [](const MethodSummary& s) { return s.iterations_mean; }, false);
    mark("proximity", [](const MethodSummary& s) { return s.proximity_mean; }, false);
    return marks;
}

inline std::string compare_csv(const std::vector<MethodSummary>& rows) {
    const auto marks = best_markers(rows);
    std::ostringstream os;
    os << "method,phantoms,psnr_mean,psnr_std,ssim_mean,ssim_std,delta_tv_percent_mean,iterations_mean,"
          "runtime_seconds_mean,proximity_mean,epsilon_misses,best\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        using detail::format_double;
        os << r.label << ',' << r.phantoms << ',' << format_double(r.psnr_mean) << ',' << format_double(r.psnr_std)
           << ',' << format_double(r.ssim_mean) << ',' << format_double(r.ssim_std) << ','
           << format_double(r.delta_tv_mean) << ',' << format_double(r.iterations_mean) << ','
           << format_double(r.runtime_mean) << ',' << format_double(r.proximity_mean) << ',' << r.epsilon_misses
           << ',' << marks[i] << '\n';
    }
    return os.str();
}

/// Aligned text rendering of compare_csv for the terminal.
inline std::string compare_table(const std::vector<MethodSummary>& rows) {
    const auto marks = best_markers(rows);
    std::size_t w = 6;
    for (const auto& r : rows) w = std::max(w, r.label.size());
    std::ostringstream os;
    char line[512];
    std::snprintf(line, sizeof line, "%-*s  %16s  %16s  %8s  %8s  %8s  %10s  %s\n", static_cast<int>(w), "method",
                  "PSNR", "SSIM", "dTV%", "iters", "t (s)", "proximity", "best");
    os << line;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        char psnr[32], ssim[32];
        std::snprintf(psnr, sizeof psnr, "%.2f +- %.2f", r.psnr_mean, r.psnr_std);
        std::snprintf(ssim, sizeof ssim, "%.3f +- %.3f", r.ssim_mean, r.ssim_std);
        std::snprintf(line, sizeof line, "%-*s  %16s  %16s  %8.1f  %8.1f  %8.2f  %10.4g  %s\n",
                      static_cast<int>(w), r.label.c_str(), psnr, ssim, r.delta_tv_mean, r.iterations_mean,
                      r.runtime_mean, r.proximity_mean, marks[i].c_str());
        os << line;
    }
    return os.str();
}

/// Throws ConfigError unless every config describes the same phantoms and data.
inline void check_same_data(const std::vector<RunConfig>& configs) {
    for (std::size_t i = 1; i < configs.size(); ++i) {
        const auto a = to_json(configs[0]), b = to_json(configs[i]);
        for (const char* block : {"phantom", "geometry", "dose"})
            if (a[block] != b[block])
                throw ConfigError(block, "differs between compared configs (" + configs[0].algorithm.label() +
                                             " vs " + configs[i].algorithm.label() + ")");
    }
}

struct Comparison {
    std::vector<std::vector<CellResult>> cells;  // [method][phantom]
    std::vector<MethodSummary> summaries;
};

/// Runs every method on the shared phantom batch. Each phantom's data is
/// simulated once and reused across methods.
inline Comparison run_comparison(const std::vector<RunConfig>& configs, std::size_t threads = 1) {
    if (configs.size() < 2) throw ConfigError("<compare>", "need at least two configs");
    check_same_data(configs);
    for (std::size_t i = 0; i < configs.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (configs[i].algorithm.label() == configs[j].algorithm.label())
                throw ConfigError("algorithm.name", "duplicate method label \"" + configs[i].algorithm.label() + "\"");
    const RunConfig& shared = configs[0];
    const std::size_t n = shared.phantom.count, m = configs.size();

    std::vector<Acquisition> data(n);
    parallel_for(n, threads, [&](std::size_t i) { data[i] = simulate(shared, i); });

    Comparison out;
    out.cells.assign(m, std::vector<CellResult>(n));
    parallel_for(n * m, threads, [&](std::size_t cell) {
        const std::size_t method = cell / n, i = cell % n;
        out.cells[method][i] = reconstruct(configs[method], data[i].phantom, data[i].data, data[i].geometry, i);
    });
    for (std::size_t k = 0; k < m; ++k) {
        for (const auto& c : out.cells[k]) {
            const std::string err = check_run_contracts(c.record);
            if (!err.empty())
                throw std::logic_error(configs[k].algorithm.label() + " phantom " + std::to_string(c.index) + ": " + err);
        }
        out.summaries.push_back(summarize(configs[k].algorithm.label(), out.cells[k]));
    }
    return out;
}

}  // namespace supct
