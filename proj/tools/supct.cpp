// Command-line driver: simulate, reconstruct, compare, metrics.
//
// Exit codes: 0 success, 1 internal error, 2 config error, 3 a superiorized
// run hit its safety cap before reaching epsilon, 4 I/O error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "supct/supct.hpp"

namespace fs = std::filesystem;
using namespace supct;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNotCompatible = 3;
constexpr int kExitIo = 4;

struct CommonFlags {
    std::vector<std::string> configs;
    std::vector<std::string> presets;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool many) {
    if (many) {
        cmd->add_option("--config", f.configs, "JSON run config (repeatable, one method each)");
        cmd->add_option("--preset", f.presets, "named preset (repeatable, one method each)");
    } else {
        cmd->add_option("--config", f.configs, "JSON run config; merged over --preset when both are given")
            ->expected(0, 1);
        cmd->add_option("--preset", f.presets, "named preset")->expected(0, 1);
    }
    cmd->add_option("--out", f.out, "output directory (overrides output.directory)");
    cmd->add_option("--seed", f.seed, "phantom/noise seed (overrides phantom.seed)");
    cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::Range(1, 256));
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot read " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("<json>", path + ": " + e.what());
    }
}

RunConfig finish(RunConfig cfg, const CommonFlags& f) {
    if (f.out) cfg.output.directory = *f.out;
    if (f.seed) cfg.phantom.seed = *f.seed;
    return cfg;
}

/// One config from an optional preset and an optional file layered on top.
RunConfig single_config(const CommonFlags& f) {
    if (f.presets.empty() && f.configs.empty()) throw ConfigError("<cli>", "give --config and/or --preset");
    nlohmann::json overrides = f.configs.empty() ? nlohmann::json::object() : read_json_file(f.configs[0]);
    if (!f.presets.empty()) return finish(preset_config(f.presets[0], overrides), f);
    return finish(parse_config(overrides), f);
}

std::vector<RunConfig> many_configs(const CommonFlags& f) {
    std::vector<RunConfig> out;
    for (const auto& p : f.presets) out.push_back(finish(preset_config(p), f));
    for (const auto& c : f.configs) out.push_back(finish(parse_config(read_json_file(c)), f));
    return out;
}

int cmd_simulate(const CommonFlags& f) {
    const RunConfig cfg = single_config(f);
    const fs::path dir = ensure_directory(cfg.output.directory);
    parallel_for(cfg.phantom.count, f.threads, [&](std::size_t i) {
        write_acquisition(cfg, simulate(cfg, i), i, dir);
    });
    std::printf("simulated %zu phantom(s) into %s\n", cfg.phantom.count, dir.string().c_str());
    return 0;
}

int cmd_reconstruct(const CommonFlags& f) {
    const RunConfig cfg = single_config(f);
    const fs::path dir = ensure_directory(cfg.output.directory);
    FanBeamGeometry full = make_geometry(cfg);
    const FanBeamGeometry geom = subsample_geometry(full, cfg.dose.keep_every);

    std::vector<CellResult> cells(cfg.phantom.count);
    parallel_for(cfg.phantom.count, f.threads, [&](std::size_t i) {
        const Image phantom = read_image(dir / (cell_stem("phantom", i) + ".ssrt"));
        const Sinogram data = read_sinogram(dir / (cell_stem("sinogram", i) + ".ssrt"));
        if (phantom.rows() != geom.num_pixels_per_side || data.num_views() != geom.num_views ||
            data.num_bins() != geom.num_detector_bins)
            throw IoError("simulated data in " + dir.string() + " does not match the config; rerun simulate");
        cells[i] = reconstruct(cfg, phantom, data, geom, i);
    });
    write_reconstruction(cfg, cells, dir);

    int status = 0;
    for (const auto& c : cells) {
        const std::string err = check_run_contracts(c.record);
        if (!err.empty()) throw std::logic_error("phantom " + std::to_string(c.index) + ": " + err);
        if (missed_epsilon(c.record)) status = kExitNotCompatible;
    }
    std::printf("%s", compare_table({summarize(cfg.algorithm.label(), cells)}).c_str());
    if (status) std::fprintf(stderr, "warning: at least one run stopped at the safety cap before reaching epsilon\n");
    return status;
}

int cmd_compare(const CommonFlags& f) {
    const std::vector<RunConfig> configs = many_configs(f);
    const Comparison cmp = run_comparison(configs, f.threads);
    const fs::path dir = ensure_directory(configs[0].output.directory);
    for (std::size_t k = 0; k < configs.size(); ++k) write_reconstruction(configs[k], cmp.cells[k], dir);
    write_text(dir / "compare.csv", compare_csv(cmp.summaries));
    std::printf("%s", compare_table(cmp.summaries).c_str());
    for (const auto& s : cmp.summaries)
        if (s.epsilon_misses) return kExitNotCompatible;
    return 0;
}

int cmd_metrics(const std::string& image, const std::string& reference, bool peak_squared) {
    const Image x = read_image(image);
    const Image y = read_image(reference);
    if (!x.same_shape(y)) throw IoError("images differ in shape");
    const MetricReport r = evaluate_image(x, y, {}, PsnrOptions{peak_squared});
    std::printf("psnr,ssim,delta_tv_percent\n%s,%s,%s\n", detail::format_double(r.psnr).c_str(),
                detail::format_double(r.ssim).c_str(), detail::format_double(r.delta_tv_percent).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Superiorized CT reconstruction experiments"};
    app.require_subcommand(1);

    CommonFlags sim_flags, rec_flags, cmp_flags;
    auto* sim = app.add_subcommand("simulate", "write phantoms and simulated sinograms");
    add_common(sim, sim_flags, false);
    auto* rec = app.add_subcommand("reconstruct", "reconstruct previously simulated data");
    add_common(rec, rec_flags, false);
    auto* cmp = app.add_subcommand("compare", "run several methods on one phantom batch and tabulate");
    add_common(cmp, cmp_flags, true);

    std::string image, reference;
    bool peak_squared = false;
    auto* met = app.add_subcommand("metrics", "PSNR, SSIM and dTV% of one image against a reference");
    met->add_option("--image", image, "reconstructed image (.ssrt)")->required();
    met->add_option("--reference", reference, "reference image (.ssrt)")->required();
    met->add_flag("--psnr-peak-squared", peak_squared, "use max(reference)^2 as the PSNR peak");

    std::optional<std::string> show;
    auto* pre = app.add_subcommand("presets", "list presets or print one as JSON");
    pre->add_option("--show", show, "preset to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sim) return cmd_simulate(sim_flags);
        if (*rec) return cmd_reconstruct(rec_flags);
        if (*cmp) return cmd_compare(cmp_flags);
        if (*met) return cmd_metrics(image, reference, peak_squared);
        if (*pre) {
            if (show) std::printf("%s\n", preset_json(*show).dump(2).c_str());
            else
                for (const auto& n : preset_names()) std::printf("%s\n", n.c_str());
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
