#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "supct/image.hpp"
#include "supct/metrics.hpp"
#include "supct/penalty.hpp"

namespace supct {

enum class Termination {
    completed,           // fixed iteration count reached (basic algorithm)
    epsilon_compatible,  // proximity fell below epsilon
    safety_cap,          // max_outer_iterations reached first
    not_run,             // degenerate input, e.g. proximity already zero
};

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::completed: return "completed";
        case Termination::epsilon_compatible: return "epsilon_compatible";
        case Termination::safety_cap: return "safety_cap";
        case Termination::not_run: return "not_run";
    }
    return "unknown";
}

/// State after the k-th application of the basic algorithm (k starts at 1).
struct IterationRow {
    std::size_t k = 0;
    long long ell = -1;
    double beta = 0.0;  // total perturbation step applied before this application
    double phi = 0.0;
    double proximity = 0.0;
    bool gate_fired = false;
    std::optional<double> psnr;
    std::optional<double> ssim;
};

/// One accepted (applied) perturbation.
struct PerturbationEvent {
    std::size_t k = 0;  // outer iteration the perturbation was applied in (0-based)
    std::size_t n = 0;  // inner index (conventional variant), 0 otherwise
    long long ell = 0;
    double beta = 0.0;
    double direction_norm = 1.0;
    double phi_reference = 0.0;  // phi(x^k) the step was compared against
    double phi_after = 0.0;
};

struct RunRecord {
    std::string variant;
    std::vector<IterationRow> rows;
    std::vector<PerturbationEvent> perturbations;
    Termination status = Termination::completed;
    Image final_image;
    double epsilon = std::numeric_limits<double>::quiet_NaN();
    // Summability bound parameters; alpha stays NaN where the bound does not apply.
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
    std::size_t skipped_perturbations = 0;
    std::size_t zero_beta_steps = 0;  // adaptive variant: phi(x^k) < alpha_k branch
    double runtime_seconds = 0.0;

    std::size_t iterations() const { return rows.size(); }

    double final_proximity() const {
        return rows.empty() ? std::numeric_limits<double>::quiet_NaN() : rows.back().proximity;
    }

    double beta_sum() const {
        double s = 0.0;
        for (const auto& p : perturbations) s += p.beta;
        return s;
    }

    double summability_bound() const { return alpha / (1.0 - gamma); }
};

/// Per-iteration hooks shared by all drivers.
struct RunOptions {
    std::optional<Image> reference;  // enables psnr/ssim columns
    TvConfig tv;                     // penalty used for the phi column
    PsnrOptions psnr_options;
    std::function<void(std::size_t k, const Image& x)> observer;
};

namespace detail {

inline IterationRow make_row(std::size_t k, const Image& x, double proximity, const RunOptions& opt) {
    IterationRow row;
    row.k = k;
    row.phi = tv_value(x, opt.tv);
    row.proximity = proximity;
    if (opt.reference) {
        row.psnr = psnr(x, *opt.reference, opt.psnr_options);
        row.ssim = ssim(x, *opt.reference);
    }
    return row;
}

inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace detail

/// Header: variant,k,ell,beta,phi,proximity,gate_fired,psnr,ssim
inline std::string run_record_csv(const RunRecord& rec) {
    std::ostringstream os;
    os << "variant,k,ell,beta,phi,proximity,gate_fired,psnr,ssim\n";
    for (const auto& r : rec.rows) {
        os << rec.variant << ',' << r.k << ',' << r.ell << ',' << detail::format_double(r.beta) << ','
           << detail::format_double(r.phi) << ',' << detail::format_double(r.proximity) << ','
           << (r.gate_fired ? 1 : 0) << ',' << (r.psnr ? detail::format_double(*r.psnr) : "") << ','
           << (r.ssim ? detail::format_double(*r.ssim) : "") << '\n';
    }
    return os.str();
}

/// Header: k,n,ell,beta,direction_norm,phi_reference,phi_after
inline std::string perturbations_csv(const RunRecord& rec) {
    std::ostringstream os;
    os << "k,n,ell,beta,direction_norm,phi_reference,phi_after\n";
    for (const auto& p : rec.perturbations)
        os << p.k << ',' << p.n << ',' << p.ell << ',' << detail::format_double(p.beta) << ','
           << detail::format_double(p.direction_norm) << ',' << detail::format_double(p.phi_reference)
           << ',' << detail::format_double(p.phi_after) << '\n';
    return os.str();
}

/// Checks the superiorization contracts on a finished record: summable steps,
/// unit directions, increasing ell, and epsilon-compatibility on normal
/// termination. Returns an empty string when all hold, else the first violation.
inline std::string check_run_contracts(const RunRecord& rec) {
    if (!std::isnan(rec.alpha) && !rec.perturbations.empty()) {
        if (rec.beta_sum() > rec.summability_bound() + 1e-9)
            return "sum of beta " + detail::format_double(rec.beta_sum()) + " exceeds alpha/(1-gamma) " +
                   detail::format_double(rec.summability_bound());
    }
    long long last_ell = -1;
    for (const auto& p : rec.perturbations) {
        if (std::abs(p.direction_norm - 1.0) >= 1e-12) return "non-unit perturbation direction";
        if (rec.variant != "adaptive") {
            if (p.ell <= last_ell) return "ell did not increase across perturbations";
            last_ell = p.ell;
        }
    }
    for (std::size_t i = 1; i < rec.rows.size(); ++i)
        if (rec.rows[i].k <= rec.rows[i - 1].k) return "rows not strictly ordered by k";
    if (rec.status == Termination::epsilon_compatible && !(rec.final_proximity() < rec.epsilon))
        return "terminated as epsilon-compatible but final proximity is not below epsilon";
    return {};
}

}  // namespace supct
