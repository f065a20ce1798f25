#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "supct/denoise.hpp"
#include "supct/geometry.hpp"
#include "supct/metrics.hpp"
#include "supct/penalty.hpp"
#include "supct/recon.hpp"
#include "supct/superiorize.hpp"

namespace supct {

/// Invalid or unparsable run configuration. `field` is a dotted path such as
/// "algorithm.pnp.gamma", or "<json>" for syntax errors.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Field of view of the reference scanner, 512 pixels of 0.568 mm.
inline constexpr double kReferenceFovMm = 512 * 0.568;

struct GeometryBlock {
    double pixel_size = 0.0;  // mm; 0 means kReferenceFovMm / side
    std::size_t num_views = 900;
    double source_to_center = 600.0;
    double source_to_detector = 1200.0;
    std::size_t num_detector_bins = 0;  // 0: derived from the image size
    double detector_bin_size = 0.0;     // 0: derived from the image size
};

enum class PhantomKind { shepp_logan, random, mixed };

struct PhantomBlock {
    PhantomKind kind = PhantomKind::random;
    std::size_t side = 64;
    std::uint64_t seed = 0;
    std::size_t num_ellipses = 10;
    std::size_t count = 10;  // batch size; phantom i uses seed + i
};

struct DoseBlock {
    double I0 = 1e6;
    bool noiseless = false;
    std::size_t keep_every = 1;
    // When nonzero, I0 is rescaled by (side / reference_side)^2 so a small grid
    // sees the relative noise level of a reference_side grid at the stated I0.
    std::size_t reference_side = 0;

    double effective_I0(std::size_t side) const {
        if (reference_side == 0) return I0;
        const double r = static_cast<double>(side) / static_cast<double>(reference_side);
        return I0 * r * r;
    }
};

enum class Variant { basic, conventional, adaptive, pnp, postprocess };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::basic: return "basic";
        case Variant::conventional: return "conventional";
        case Variant::adaptive: return "adaptive";
        case Variant::pnp: return "pnp";
        case Variant::postprocess: return "postprocess";
    }
    return "unknown";
}

struct BasicBlock {
    std::size_t iterations = 12;
    BasicAlgorithmConfig cfg{};
};

struct AdaptiveBlock {
    bool noisy_mode = true;
    std::optional<double> alpha0;       // nullopt: phi(P_T(0)) / 2
    std::optional<double> epsilon_inc;  // nullopt: phi(P_T(0)) / 200
};

struct AlgorithmBlock {
    Variant variant = Variant::basic;
    std::string name;  // label in file names and tables; defaults to the variant
    BasicBlock basic;
    std::optional<double> epsilon;  // nullopt: final proximity of the basic run
    std::size_t max_outer_iterations = 2000;
    ConventionalConfig conventional{};
    AdaptiveBlock adaptive;
    PnPConfig pnp{};
    DenoiserSpec denoiser = denoisers::NonLocalMeans{};
    TvConfig tv{};

    std::string label() const { return name.empty() ? to_string(variant) : name; }
};

struct OutputBlock {
    std::string directory = "out";
    bool export_png = true;
};

struct RunConfig {
    GeometryBlock geometry;
    PhantomBlock phantom;
    DoseBlock dose;
    AlgorithmBlock algorithm;
    PsnrOptions metrics{};
    OutputBlock output;
};

/// Full-view scanner geometry for the configured image size.
inline FanBeamGeometry make_geometry(const RunConfig& cfg) {
    const std::size_t side = cfg.phantom.side;
    const auto& g = cfg.geometry;
    const double ps = g.pixel_size > 0.0 ? g.pixel_size : kReferenceFovMm / static_cast<double>(side);
    FanBeamGeometry geom = FanBeamGeometry::for_image(side, ps, g.num_views, g.source_to_center, g.source_to_detector);
    if (g.num_detector_bins > 0) geom.num_detector_bins = g.num_detector_bins;
    if (g.detector_bin_size > 0.0) geom.detector_bin_size = g.detector_bin_size;
    geom.validate();
    return geom;
}

namespace detail {

using nlohmann::json;

/// Walks one JSON object, tracking the dotted path and which keys were consumed.
class Fields {
public:
    Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key) {
        seen_.push_back(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) throw ConfigError(at(key), "expected a number");
            out = v->get<double>();
            if (!std::isfinite(out)) throw ConfigError(at(key), "must be finite");
        }
    }

    void optional_number(const std::string& key, std::optional<double>& out) {
        if (const json* v = find(key)) {
            if (v->is_string() && v->get<std::string>() == "auto") {
                out.reset();
                return;
            }
            if (!v->is_number()) throw ConfigError(at(key), "expected a number or \"auto\"");
            out = v->get<double>();
        }
    }

    template <class T>
    void count(const std::string& key, T& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer() || v->get<long long>() < 0)
                throw ConfigError(at(key), "expected a nonnegative integer");
            out = static_cast<T>(v->get<std::uint64_t>());
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw ConfigError(at(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    template <class E>
    void choice(const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> options) {
        std::string s;
        string(key, s);
        if (!find(key)) return;
        std::string names;
        for (const auto& [name, value] : options) {
            if (s == name) {
                out = value;
                return;
            }
            names += names.empty() ? name : std::string(", ") + name;
        }
        throw ConfigError(at(key), "unknown value \"" + s + "\" (expected one of " + names + ")");
    }

    std::optional<Fields> child(const std::string& key) {
        if (const json* v = find(key)) return Fields(*v, at(key));
        return std::nullopt;
    }

    /// Rejects keys that were never looked up.
    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            bool known = false;
            for (const auto& s : seen_) known = known || s == it.key();
            if (!known) throw ConfigError(at(it.key()), "unknown key");
        }
    }

private:
    const json& obj_;
    std::string path_;
    std::vector<std::string> seen_;
};

inline void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError(field, what);
}

inline DenoiserSpec parse_denoiser(Fields& f) {
    std::string kind = "nlm";
    f.string("kind", kind);
    DenoiserSpec spec;
    if (kind == "identity") {
        spec = denoisers::Identity{};
    } else if (kind == "gaussian") {
        denoisers::Gaussian d;
        f.number("sigma", d.sigma);
        spec = d;
    } else if (kind == "median") {
        denoisers::Median d;
        f.count("radius", d.radius);
        spec = d;
    } else if (kind == "nlm") {
        denoisers::NonLocalMeans d;
        f.count("patch", d.patch);
        f.count("window", d.window);
        f.number("h", d.h);
        spec = d;
    } else {
        throw ConfigError(f.at("kind"), "unknown denoiser \"" + kind + "\" (expected identity, gaussian, median, nlm)");
    }
    f.finish();
    try {
        validate(spec);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(f.at("kind"), e.what());
    }
    return spec;
}

inline void parse_algorithm(Fields& f, AlgorithmBlock& a) {
    f.choice("variant", a.variant,
             {{"basic", Variant::basic},
              {"conventional", Variant::conventional},
              {"adaptive", Variant::adaptive},
              {"pnp", Variant::pnp},
              {"postprocess", Variant::postprocess}});
    require(f.find("variant") != nullptr, f.at("variant"), "required");
    f.string("name", a.name);
    for (char c : a.name)
        require(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.', f.at("name"),
                "may only contain letters, digits, '-', '_' and '.'");

    if (auto b = f.child("basic")) {
        b->count("iterations", a.basic.iterations);
        b->count("num_subsets", a.basic.cfg.num_subsets);
        b->number("relaxation", a.basic.cfg.relaxation);
        b->boolean("nonneg_projection", a.basic.cfg.nonneg_projection);
        b->finish();
        require(a.basic.iterations >= 1, b->at("iterations"), "must be >= 1");
        require(a.basic.cfg.num_subsets >= 1, b->at("num_subsets"), "must be >= 1");
        require(a.basic.cfg.relaxation > 0.0 && a.basic.cfg.relaxation < 2.0, b->at("relaxation"),
                "must lie in (0, 2)");
    }
    if (const auto* e = f.find("epsilon")) {
        if (e->is_string() && e->get<std::string>() == "from_basic") a.epsilon.reset();
        else if (e->is_number() && e->get<double>() > 0.0) a.epsilon = e->get<double>();
        else throw ConfigError(f.at("epsilon"), "expected a positive number or \"from_basic\"");
    }
    f.count("max_outer_iterations", a.max_outer_iterations);
    require(a.max_outer_iterations >= 1, f.at("max_outer_iterations"), "must be >= 1");

    if (auto c = f.child("conventional")) {
        c->count("N", a.conventional.N);
        c->number("alpha", a.conventional.alpha);
        c->number("gamma", a.conventional.gamma);
        c->count("max_trials", a.conventional.max_trials);
        c->finish();
        require(a.conventional.N >= 1, c->at("N"), "must be >= 1");
        require(a.conventional.alpha > 0.0, c->at("alpha"), "must be > 0");
        require(a.conventional.gamma > 0.0 && a.conventional.gamma < 1.0, c->at("gamma"), "must lie in (0, 1)");
        require(a.conventional.max_trials >= 1, c->at("max_trials"), "must be >= 1");
    }
    if (auto d = f.child("adaptive")) {
        d->boolean("noisy_mode", a.adaptive.noisy_mode);
        d->optional_number("alpha0", a.adaptive.alpha0);
        d->optional_number("epsilon_inc", a.adaptive.epsilon_inc);
        d->finish();
        require(!a.adaptive.alpha0 || *a.adaptive.alpha0 > 0.0, d->at("alpha0"), "must be > 0");
        require(!a.adaptive.epsilon_inc || *a.adaptive.epsilon_inc > 0.0, d->at("epsilon_inc"), "must be > 0");
    }
    if (auto p = f.child("pnp")) {
        p->optional_number("alpha", a.pnp.alpha);
        p->number("gamma", a.pnp.gamma);
        p->count("k_min", a.pnp.k_min);
        p->count("k_step", a.pnp.k_step);
        p->finish();
        require(!a.pnp.alpha || *a.pnp.alpha > 0.0, p->at("alpha"), "must be > 0");
        require(a.pnp.gamma > 0.0 && a.pnp.gamma < 1.0, p->at("gamma"), "must lie in (0, 1)");
        require(a.pnp.k_step >= 1, p->at("k_step"), "must be >= 1");
    }
    if (auto d = f.child("denoiser")) a.denoiser = parse_denoiser(*d);
    if (auto t = f.child("tv")) {
        t->number("eps_tv", a.tv.eps_tv);
        t->finish();
        require(a.tv.eps_tv > 0.0, t->at("eps_tv"), "must be > 0");
    }
    f.finish();
}

}  // namespace detail

/// Parses and validates a JSON run configuration. Missing keys take their
/// defaults; unknown keys and out-of-range values raise ConfigError.
inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::require;
    RunConfig cfg;
    detail::Fields root(j, "");

    if (auto g = root.child("geometry")) {
        auto& b = cfg.geometry;
        g->number("pixel_size", b.pixel_size);
        g->count("num_views", b.num_views);
        g->number("source_to_center", b.source_to_center);
        g->number("source_to_detector", b.source_to_detector);
        g->count("num_detector_bins", b.num_detector_bins);
        g->number("detector_bin_size", b.detector_bin_size);
        g->finish();
        require(b.pixel_size >= 0.0, g->at("pixel_size"), "must be >= 0 (0 selects the default)");
        require(b.num_views >= 1, g->at("num_views"), "must be >= 1");
        require(b.detector_bin_size >= 0.0, g->at("detector_bin_size"), "must be >= 0");
    }
    if (auto p = root.child("phantom")) {
        auto& b = cfg.phantom;
        p->choice("kind", b.kind,
                  {{"shepp_logan", PhantomKind::shepp_logan},
                   {"random", PhantomKind::random},
                   {"mixed", PhantomKind::mixed}});
        p->count("side", b.side);
        p->count("seed", b.seed);
        p->count("num_ellipses", b.num_ellipses);
        p->count("count", b.count);
        p->finish();
        require(b.side >= 16, p->at("side"), "must be >= 16");
        require(b.num_ellipses >= 1, p->at("num_ellipses"), "must be >= 1");
        require(b.count >= 1, p->at("count"), "must be >= 1");
    }
    if (auto d = root.child("dose")) {
        auto& b = cfg.dose;
        d->number("I0", b.I0);
        d->boolean("noiseless", b.noiseless);
        d->count("keep_every", b.keep_every);
        d->count("reference_side", b.reference_side);
        d->finish();
        require(b.I0 > 0.0, d->at("I0"), "must be > 0");
        require(b.keep_every >= 1, d->at("keep_every"), "must be >= 1");
        require(cfg.geometry.num_views % b.keep_every == 0, d->at("keep_every"),
                "must divide geometry.num_views (" + std::to_string(cfg.geometry.num_views) + ")");
    }
    if (auto a = root.child("algorithm")) detail::parse_algorithm(*a, cfg.algorithm);
    else throw ConfigError("algorithm", "required");
    if (auto m = root.child("metrics")) {
        m->boolean("psnr_peak_squared", cfg.metrics.peak_squared);
        m->finish();
    }
    if (auto o = root.child("output")) {
        o->string("directory", cfg.output.directory);
        o->boolean("export_png", cfg.output.export_png);
        o->finish();
        require(!cfg.output.directory.empty(), o->at("directory"), "must not be empty");
    }
    root.finish();

    const std::size_t views = cfg.geometry.num_views / cfg.dose.keep_every;
    require(cfg.algorithm.basic.cfg.num_subsets <= views, "algorithm.basic.num_subsets",
            "exceeds the number of acquired views (" + std::to_string(views) + ")");
    try {
        (void)make_geometry(cfg);
    } catch (const GeometryError& e) {
        throw ConfigError("geometry", e.what());
    }
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("<json>", e.what());
    }
    return parse_config(j);
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Serializes every field, so that parse_config(to_json(c)) reproduces c.
inline nlohmann::json to_json(const RunConfig& c) {
    using nlohmann::json;
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json("auto"); };
    const char* kinds[] = {"shepp_logan", "random", "mixed"};
    json den = std::visit(
        [](const auto& d) -> json {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, denoisers::Identity>) return {{"kind", "identity"}};
            else if constexpr (std::is_same_v<T, denoisers::Gaussian>) return {{"kind", "gaussian"}, {"sigma", d.sigma}};
            else if constexpr (std::is_same_v<T, denoisers::Median>) return {{"kind", "median"}, {"radius", d.radius}};
            else return {{"kind", "nlm"}, {"patch", d.patch}, {"window", d.window}, {"h", d.h}};
        },
        c.algorithm.denoiser);
    const auto& a = c.algorithm;
    return {
        {"geometry",
         {{"pixel_size", c.geometry.pixel_size},
          {"num_views", c.geometry.num_views},
          {"source_to_center", c.geometry.source_to_center},
          {"source_to_detector", c.geometry.source_to_detector},
          {"num_detector_bins", c.geometry.num_detector_bins},
          {"detector_bin_size", c.geometry.detector_bin_size}}},
        {"phantom",
         {{"kind", kinds[static_cast<int>(c.phantom.kind)]},
          {"side", c.phantom.side},
          {"seed", c.phantom.seed},
          {"num_ellipses", c.phantom.num_ellipses},
          {"count", c.phantom.count}}},
        {"dose",
         {{"I0", c.dose.I0},
          {"noiseless", c.dose.noiseless},
          {"keep_every", c.dose.keep_every},
          {"reference_side", c.dose.reference_side}}},
        {"algorithm",
         {{"variant", to_string(a.variant)},
          {"name", a.name},
          {"basic",
           {{"iterations", a.basic.iterations},
            {"num_subsets", a.basic.cfg.num_subsets},
            {"relaxation", a.basic.cfg.relaxation},
            {"nonneg_projection", a.basic.cfg.nonneg_projection}}},
          {"epsilon", a.epsilon ? json(*a.epsilon) : json("from_basic")},
          {"max_outer_iterations", a.max_outer_iterations},
          {"conventional",
           {{"N", a.conventional.N},
            {"alpha", a.conventional.alpha},
            {"gamma", a.conventional.gamma},
            {"max_trials", a.conventional.max_trials}}},
          {"adaptive",
           {{"noisy_mode", a.adaptive.noisy_mode},
            {"alpha0", opt(a.adaptive.alpha0)},
            {"epsilon_inc", opt(a.adaptive.epsilon_inc)}}},
          {"pnp", {{"alpha", opt(a.pnp.alpha)}, {"gamma", a.pnp.gamma}, {"k_min", a.pnp.k_min}, {"k_step", a.pnp.k_step}}},
          {"denoiser", den},
          {"tv", {{"eps_tv", a.tv.eps_tv}}}}},
        {"metrics", {{"psnr_peak_squared", c.metrics.peak_squared}}},
        {"output", {{"directory", c.output.directory}, {"export_png", c.output.export_png}}},
    };
}

}  // namespace supct
