// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "supct/supct.hpp"
#include "test_util.hpp"

using namespace supct;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string summary;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Every superiorized record produced below, for the contract criteria.
std::vector<RunRecord> g_records;

void collect(const std::vector<CellResult>& cells) {
    for (const auto& c : cells)
        if (c.record.variant != "basic" && c.record.variant != "postprocess") g_records.push_back(c.record);
}

// ---------------------------------------------------------------------------

Outcome adjoint() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::uint64_t seed = 0;
    for (auto g : {FanBeamGeometry::for_image(32, 9.0, 30), FanBeamGeometry::for_image(64, 4.544, 60)}) {
        const JosephProjector op(g);
        for (int i = 0; i < 100; ++i, ++seed) {
            const Image x = testutil::random_image(g.num_pixels_per_side, g.num_pixels_per_side, seed, -1.0, 1.0);
            const Sinogram y = testutil::random_sinogram(g.num_views, g.num_detector_bins, 10000 + seed);
            const Sinogram ax = op.forward(x);
            const double gap = std::abs(vec::dot(ax.values(), y.values()) - vec::dot(x.values(), op.back(y).values()));
            worst = std::max(worst, gap / (vec::norm2(ax.values()) * vec::norm2(y.values())));
        }
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-6 && t < 10.0, "200 pairs, worst relative gap " + fmt("%.2e", worst) + ", " + fmt("%.1f s", t)};
}

Outcome dense_oracle() {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const std::size_t side = s % 2 ? 32 : 16;
        const FanBeamGeometry g = FanBeamGeometry::for_image(side, 288.0 / side, side == 32 ? 30 : 12);
        const JosephProjector op(g);
        const DenseProjector dense = DenseProjector::assemble(op);
        const Image x = testutil::random_image(side, side, 300 + s);
        const Sinogram b = testutil::random_sinogram(g.num_views, g.num_detector_bins, 400 + s);
        worst = std::max(worst, testutil::max_rel_diff(dense.forward(x), op.forward(x)));
        worst = std::max(worst, testutil::max_rel_diff(dense.back(b), op.back(b)));
        const double pm = proximity(op, x, b), pd = proximity(dense, x, b);
        worst = std::max(worst, std::abs(pm - pd) / pd);
        const BasicAlgorithmConfig cfg{1.0, 3, true};
        const Image sm = BiSart<JosephProjector>(op, b, cfg).apply(x);
        const Image sd = BiSart<DenseProjector>(dense, b, cfg).apply(x);
        worst = std::max(worst, testutil::max_rel_diff(sm, sd));
    }
    return {worst <= 1e-8, "20 cases, worst relative difference " + fmt("%.2e", worst)};
}

Outcome tv_gradient_check() {
    double worst_fd = 0.0, worst_dir = 0.0;
    const double h = 1e-5;
    for (std::uint64_t s = 0; s < 50; ++s) {
        Image x = testutil::random_image(16, 16, 500 + s);
        const Image g = tv_gradient(x);
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double v = x[j];
            x[j] = v + h;
            const double fp = tv_value(x);
            x[j] = v - h;
            const double fm = tv_value(x);
            x[j] = v;
            const double fd = (fp - fm) / (2.0 * h);
            num = std::max(num, std::abs(fd - g[j]));
            den = std::max(den, std::abs(fd));
        }
        worst_fd = std::max(worst_fd, num / den);

        std::mt19937_64 rng(600 + s);
        std::normal_distribution<double> n01;
        Image d = Image::square(16);
        for (double& v : d.values()) v = n01(rng);
        const double dn = vec::norm2(d.values());
        for (double& v : d.values()) v /= dn;
        Image xp = x, xm = x;
        for (std::size_t j = 0; j < x.size(); ++j) {
            xp[j] += h * d[j];
            xm[j] -= h * d[j];
        }
        const double an = vec::dot(g.values(), d.values());
        worst_dir = std::max(worst_dir, std::abs((tv_value(xp) - tv_value(xm)) / (2.0 * h) - an) / std::abs(an));
    }
    return {worst_fd < 1e-4 && worst_dir < 1e-5,
            "50 images, finite-difference " + fmt("%.2e", worst_fd) + ", directional " + fmt("%.2e", worst_dir)};
}

Outcome identity_reduction() {
    const JosephProjector op(FanBeamGeometry::for_image(64, 4.544, 60));
    const Image ph = shepp_logan(64);
    const BiSart<JosephProjector> basic(op, op.forward(ph), BasicAlgorithmConfig{1.0, 10, true});
    std::vector<Image> ref, got;
    RunOptions ro, po;
    ro.observer = [&](std::size_t, const Image& x) { ref.push_back(x); };
    po.observer = [&](std::size_t, const Image& x) { got.push_back(x); };
    run_basic(basic, Image::square(64), 30, ro);
    superiorize_pnp(basic, SpecDenoiser{denoisers::Identity{}}, Image::square(64), PnPConfig{}, {1e-300, 30}, po);
    double worst = got.size() == 30 ? 0.0 : INFINITY;
    for (std::size_t k = 0; k < std::min(ref.size(), got.size()); ++k)
        worst = std::max(worst, vec::max_abs_diff(ref[k].values(), got[k].values()));
    return {worst <= 1e-12, "30 iterations, worst pixel difference " + fmt("%.2e", worst)};
}

Outcome sparse_view_trend() {
    const auto t0 = std::chrono::steady_clock::now();
    const json base = {
        {"geometry", {{"num_views", 360}}},
        {"phantom", {{"kind", "mixed"}, {"side", 64}, {"seed", 1}, {"count", 6}}},
        {"dose", {{"noiseless", true}, {"keep_every", 10}}},
        {"output", {{"export_png", false}}},
    };
    const json basic_block = {{"iterations", 12}, {"num_subsets", 36}};
    std::vector<RunConfig> cfgs;
    json b = base, c = base, p = base;
    b["algorithm"] = {{"variant", "basic"}, {"basic", basic_block}};
    c["algorithm"] = {{"variant", "conventional"},
                      {"basic", basic_block},
                      {"conventional", {{"N", 20}, {"alpha", 1.0}, {"gamma", 0.9995}}}};
    p["algorithm"] = {{"variant", "pnp"},
                      {"basic", basic_block},
                      {"pnp", {{"alpha", "auto"}, {"gamma", 0.95}}},
                      {"denoiser", {{"kind", "nlm"}, {"h", 0.03}}}};
    const Comparison cmp = run_comparison({parse_config(b), parse_config(c), parse_config(p)});
    collect(cmp.cells[1]);
    collect(cmp.cells[2]);
    const double t = seconds_since(t0);
    const auto& s = cmp.summaries;
    const double dp_c = s[1].psnr_mean - s[0].psnr_mean, ds_c = s[1].ssim_mean - s[0].ssim_mean;
    const double dp_p = s[2].psnr_mean - s[0].psnr_mean, ds_p = s[2].ssim_mean - s[0].ssim_mean;
    const bool ok = s[1].epsilon_misses == 0 && s[2].epsilon_misses == 0 && dp_c >= 1.0 && ds_c >= 0.01 &&
                    dp_p >= 1.0 && ds_p >= 0.01 && t < 300.0;
    std::printf("%s", compare_table(s).c_str());
    return {ok, "conventional dPSNR " + fmt("%+.2f dB", dp_c) + " dSSIM " + fmt("%+.4f", ds_c) + "; pnp dPSNR " +
                    fmt("%+.2f dB", dp_p) + " dSSIM " + fmt("%+.4f", ds_p) + "; misses " +
                    std::to_string(s[1].epsilon_misses + s[2].epsilon_misses) + "; " + fmt("%.0f s", t)};
}

Outcome low_dose_trend() {
    const json overrides = {
        {"geometry", {{"num_views", 180}}},
        {"phantom", {{"kind", "shepp_logan"}, {"side", 64}, {"seed", 1}, {"count", 5}}},
        {"output", {{"export_png", false}}},
    };
    std::vector<RunConfig> cfgs;
    for (const char* v : {"basic", "pnp", "adaptive", "post"})
        cfgs.push_back(preset_config(std::string("lowdose-2.5e4-") + v, overrides));
    const Comparison cmp = run_comparison(cfgs);
    collect(cmp.cells[1]);
    collect(cmp.cells[2]);
    std::printf("%s", compare_table(cmp.summaries).c_str());

    const auto& basic = cmp.cells[0];
    bool ok = true;
    for (std::size_t m : {1u, 2u}) {
        ok = ok && cmp.summaries[m].epsilon_misses == 0;
        ok = ok && cmp.summaries[m].psnr_mean >= cmp.summaries[0].psnr_mean;
        for (std::size_t i = 0; i < basic.size(); ++i)
            ok = ok && cmp.cells[m][i].report.proximity <= basic[i].record.final_proximity();
    }
    std::size_t post_above = 0;
    for (std::size_t i = 0; i < basic.size(); ++i)
        post_above += cmp.cells[3][i].report.proximity > basic[i].record.final_proximity();
    ok = ok && post_above == basic.size();
    return {ok, "PSNR basic " + fmt("%.2f", cmp.summaries[0].psnr_mean) + ", pnp " +
                    fmt("%.2f", cmp.summaries[1].psnr_mean) + ", adaptive " + fmt("%.2f", cmp.summaries[2].psnr_mean) +
                    "; postprocess above epsilon in " + std::to_string(post_above) + "/" +
                    std::to_string(basic.size())};
}

Outcome semiconvergence() {
    std::size_t early = 0;
    std::string peaks;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const json j = {
            {"geometry", {{"num_views", 180}}},
            {"phantom", {{"kind", "random"}, {"side", 64}, {"seed", 100 + s}, {"count", 1}}},
            {"dose", {{"I0", 1e4}, {"reference_side", 512}}},
            {"algorithm", {{"variant", "basic"}, {"basic", {{"iterations", 60}, {"num_subsets", 10}}}}},
        };
        const auto cells = run_batch(parse_config(j));
        std::size_t best_k = 0;
        double best = -INFINITY;
        for (const auto& r : cells[0].record.rows)
            if (*r.psnr > best) {
                best = *r.psnr;
                best_k = r.k;
            }
        early += best_k < 50;
        peaks += (peaks.empty() ? "" : ",") + std::to_string(best_k);
    }
    return {early >= 8, std::to_string(early) + "/10 peak before iteration 50 (peaks at " + peaks + ")"};
}

std::size_t g_adaptive_noiseless_ok = 0, g_adaptive_noiseless_runs = 0;

Outcome adaptive_behavior() {
    json j = {
        {"geometry", {{"num_views", 180}}},
        {"phantom", {{"kind", "shepp_logan"}, {"side", 64}, {"count", 1}}},
        {"dose", {{"noiseless", true}}},
        {"algorithm", {{"variant", "basic"}, {"basic", {{"iterations", 12}, {"num_subsets", 10}}}}},
    };
    const RunConfig basic_cfg = parse_config(j);
    const Acquisition a = simulate(basic_cfg, 0);
    const double eps0 = reconstruct(basic_cfg, a.phantom, a.data, a.geometry).record.final_proximity();

    std::string detail;
    for (double f : {1.0, 1.5, 2.0, 4.0}) {
        j["algorithm"]["variant"] = "adaptive";
        j["algorithm"]["epsilon"] = f * eps0;
        j["algorithm"]["adaptive"] = {{"noisy_mode", false}};
        const CellResult c = reconstruct(parse_config(j), a.phantom, a.data, a.geometry);
        collect({c});
        ++g_adaptive_noiseless_runs;
        const bool ok = c.record.status == Termination::epsilon_compatible;
        g_adaptive_noiseless_ok += ok;
        detail += fmt(" x%.1f:", f) + std::to_string(c.record.iterations()) + (ok ? "" : "(miss)");
    }
    std::size_t zero_beta = 0;
    for (const auto& r : g_records)
        if (r.variant == "adaptive") zero_beta += r.zero_beta_steps;
    const bool ok = g_adaptive_noiseless_ok == g_adaptive_noiseless_runs && zero_beta > 0;
    return {ok, "epsilon multiples of the basic run, iterations" + detail + "; zero-beta steps logged " +
                    std::to_string(zero_beta)};
}

Outcome metric_oracles() {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Image x = testutil::random_image(24, 24, 700 + s);
        const Image y = testutil::random_image(24, 24, 800 + s);
        const double n = static_cast<double>(x.size());
        double mse = 0.0, ymax = y[0], mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            mse += (x[i] - y[i]) * (x[i] - y[i]) / n;
            ymax = std::max(ymax, y[i]);
            mx += x[i] / n;
            my += y[i] / n;
        }
        double vx = 0.0, vy = 0.0, cxy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            vx += (x[i] - mx) * (x[i] - mx) / n;
            vy += (y[i] - my) * (y[i] - my) / n;
            cxy += (x[i] - mx) * (y[i] - my) / n;
        }
        const double c1 = std::pow(0.01 * ymax, 2), c2 = std::pow(0.03 * ymax, 2);
        const double ref_ssim = (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        auto naive_tv = [](const Image& z) {
            double t = 0.0;
            for (std::size_t r = 0; r < z.rows(); ++r)
                for (std::size_t c = 0; c < z.cols(); ++c) {
                    const double a = r + 1 < z.rows() ? z(r + 1, c) - z(r, c) : 0.0;
                    const double b = c + 1 < z.cols() ? z(r, c + 1) - z(r, c) : 0.0;
                    t += std::sqrt(a * a + b * b + 1e-12);
                }
            return t;
        };
        const double ref_dtv = (naive_tv(y) - naive_tv(x)) / naive_tv(y) * 100.0;
        worst = std::max(worst, std::abs(psnr(x, y) - 10.0 * std::log10(ymax / mse)));
        worst = std::max(worst, std::abs(ssim(x, y) - ref_ssim));
        worst = std::max(worst, std::abs(delta_tv_percent(x, y) - ref_dtv));
    }
    const Image z = testutil::random_image(24, 24, 999);
    const bool exact = ssim(z, z) == 1.0 && delta_tv_percent(z, z) == 0.0;
    return {worst <= 1e-10 && exact, "100 pairs, worst difference " + fmt("%.2e", worst) +
                                         (exact ? ", identity cases exact" : ", identity cases NOT exact")};
}

Outcome contracts() {
    std::size_t violations = 0, checked = 0;
    std::string first;
    for (const auto& r : g_records) {
        if (r.status != Termination::epsilon_compatible) continue;
        ++checked;
        std::string err = check_run_contracts(r);
        if (err.empty() && !std::isnan(r.alpha) && r.beta_sum() > r.summability_bound() + 1e-9) err = "summability";
        if (err.empty() && !(r.final_proximity() < r.epsilon)) err = "final proximity not below epsilon";
        if (!err.empty()) {
            ++violations;
            if (first.empty()) first = r.variant + ": " + err;
        }
    }
    return {violations == 0 && checked > 0,
            std::to_string(checked) + " terminated runs, " + std::to_string(violations) + " violations" +
                (first.empty() ? "" : " (" + first + ")")};
}

Outcome conventional_monotonicity() {
    std::size_t events = 0, violations = 0;
    for (const auto& r : g_records) {
        if (r.variant != "conventional") continue;
        for (const auto& p : r.perturbations) {
            ++events;
            violations += !(p.phi_after < p.phi_reference);
        }
    }
    return {violations == 0 && events > 0,
            std::to_string(events) + " accepted perturbations, " + std::to_string(violations) + " violations"};
}

Outcome determinism() {
    std::size_t mismatched = 0;
    std::string which;
    for (const auto& name : preset_names()) {
        const json small = {{"phantom", {{"count", 1}, {"seed", 3}}}, {"output", {{"export_png", false}}}};
        const RunConfig cfg = preset_config(name, small);
        auto render = [&] {
            const auto cells = run_batch(cfg);
            std::string s = testutil::drop_columns(summary_csv(cells), "runtime");
            for (const auto& c : cells) s += run_record_csv(c.record) + perturbations_csv(c.record);
            return s;
        };
        if (render() != render()) {
            ++mismatched;
            which += " " + name;
        }
    }
    return {mismatched == 0, std::to_string(preset_names().size()) + " presets run twice, " +
                                 std::to_string(mismatched) + " differ" + which};
}

}  // namespace

int main() {
    const std::vector<std::pair<int, std::function<Outcome()>>> order{
        {1, adjoint},           {2, dense_oracle},          {3, tv_gradient_check},
        {4, identity_reduction}, {7, sparse_view_trend},    {8, low_dose_trend},
        {9, semiconvergence},    {10, adaptive_behavior},   {11, metric_oracles},
        {12, determinism},       {5, contracts},            {6, conventional_monotonicity},
    };
    const std::map<int, const char*> names{
        {1, "adjoint correctness"},
        {2, "dense oracle equivalence"},
        {3, "TV gradient"},
        {4, "identity denoiser reduces to basic"},
        {5, "summability and epsilon-compatibility"},
        {6, "conventional monotonicity"},
        {7, "sparse-view improvement"},
        {8, "low-dose fidelity contrast"},
        {9, "semiconvergence"},
        {10, "adaptive variant behavior"},
        {11, "metric oracles"},
        {12, "determinism"},
    };
    std::map<int, Outcome> results;
    for (const auto& [id, fn] : order) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            results[id] = fn();
        } catch (const std::exception& e) {
            results[id] = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[criterion %d done in %.1f s]\n", id, seconds_since(t0));
        std::fflush(stdout);
    }
    int failed = 0;
    std::printf("\n");
    for (const auto& [id, r] : results) {
        std::printf("%s %2d %s: %s\n", r.pass ? "PASS" : "FAIL", id, names.at(id), r.summary.c_str());
        failed += !r.pass;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
    return failed ? 1 : 0;
}
