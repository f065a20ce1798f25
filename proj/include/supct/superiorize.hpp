#pragma once

// Superiorized drivers around any BasicAlgorithm:
//   superiorize_conventional  N nonascending penalty steps per sweep, shared geometric step schedule
//   superiorize_adaptive      one level-set step per sweep, level driven by the desirability number
//   superiorize_pnp           damped displacement of a black-box procedure Psi, optional k_min/k_step gate

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>

#include "supct/image.hpp"
#include "supct/penalty.hpp"
#include "supct/recon.hpp"
#include "supct/run_record.hpp"

namespace supct {

/// Geometric step sizes alpha * gamma^ell with a run-wide counter ell.
struct PerturbationSchedule {
    double alpha = 1.0;
    double gamma = 0.9995;
    long long ell = -1;

    void validate() const {
        if (!(alpha > 0.0)) throw std::invalid_argument("PerturbationSchedule: alpha must be > 0");
        if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("PerturbationSchedule: gamma must lie in (0, 1)");
    }

    /// Advances ell and returns the new kernel step alpha * gamma^ell.
    double advance() {
        ++ell;
        return current();
    }

    double current() const { return alpha * std::pow(gamma, static_cast<double>(ell)); }
};

struct SuperiorizedRunConfig {
    double epsilon = 0.0;
    std::size_t max_outer_iterations = 2000;

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("SuperiorizedRunConfig: epsilon must be > 0");
        if (max_outer_iterations < 1) throw std::invalid_argument("SuperiorizedRunConfig: max_outer_iterations must be >= 1");
    }
};

struct ConventionalConfig {
    std::size_t N = 20;
    double alpha = 1.0;
    double gamma = 0.9995;
    std::size_t max_trials = 500;  // per perturbation; on exhaustion the step is skipped
};

struct AdaptiveConfig {
    double alpha0 = 0.0;
    double epsilon_inc = 0.0;
    bool noisy_mode = true;
};

struct PnPConfig {
    std::optional<double> alpha;  // nullopt: alpha = ||v|| at the first gated step
    double gamma = 0.95;
    std::size_t k_min = 0;
    std::size_t k_step = 1;

    bool gate(std::size_t k) const { return k >= k_min && (k - k_min) % k_step == 0; }
};

/// Step size of the adaptive variant: 0 below the level, else the distance to
/// the level set along the normalized gradient.
inline double adaptive_step_size(double phi, double level, double grad_norm) {
    if (phi < level || !(grad_norm > 0.0)) return 0.0;
    return (phi - level) / grad_norm;
}

/// zeta = (Pr(z) - Pr(x)) / Pr(x).
inline double desirability(double proximity_z, double proximity_x) {
    return (proximity_z - proximity_x) / proximity_x;
}

/// alpha + max(eps, -zeta*alpha) for noisy data, alpha + max(eps, zeta*alpha) for noiseless data.
inline double next_level(double level, double epsilon_inc, double zeta, bool noisy_mode) {
    const double signed_zeta = noisy_mode ? -zeta : zeta;
    return level + std::max(epsilon_inc, signed_zeta * level);
}

struct AdaptiveInit {
    double alpha0;
    double epsilon_inc;
};

/// alpha0 = phi(x~)/2 and eps = phi(x~)/200, with x~ one basic sweep from zero.
template <BasicAlgorithm B, Penalty P>
AdaptiveInit adaptive_initial_levels(const B& basic, const P& penalty, const Image& zero) {
    const double phi = penalty.value(basic.apply(zero));
    return {phi / 2.0, phi / 200.0};
}

/// ||psi_x - x||_2.
inline double displacement_norm(const Image& x, const Image& psi_x) {
    if (!x.same_shape(psi_x)) throw DimensionError("displacement_norm: shape mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += (psi_x[j] - x[j]) * (psi_x[j] - x[j]);
    return std::sqrt(s);
}

struct DampedStep {
    Image x_plus;
    double beta = 0.0;
    double v_norm = 0.0;
};

/// x + (beta/||v||) v with v = psi_x - x and beta = min(mu, ||v||). A full
/// step returns psi_x itself; v = 0 returns x unchanged.
inline DampedStep damped_step(const Image& x, const Image& psi_x, double mu) {
    DampedStep s;
    s.v_norm = displacement_norm(x, psi_x);
    if (s.v_norm == 0.0) {
        s.x_plus = x;
        return s;
    }
    s.beta = std::min(mu, s.v_norm);
    if (s.beta == s.v_norm) {
        s.x_plus = psi_x;
        return s;
    }
    const double scale = s.beta / s.v_norm;
    s.x_plus = x;
    for (std::size_t j = 0; j < x.size(); ++j) s.x_plus[j] += scale * (psi_x[j] - x[j]);
    return s;
}

namespace detail {

inline double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Conventional superiorization: before every sweep, N steps along the unit
/// negative gradient, each shrunk through the shared schedule until the
/// penalty drops strictly below phi(x^k).
template <BasicAlgorithm B, Penalty P>
RunRecord superiorize_conventional(const B& basic, const P& penalty, const Image& x0,
                                   const ConventionalConfig& cfg, const SuperiorizedRunConfig& run,
                                   const RunOptions& opt = {}) {
    run.validate();
    if (cfg.N < 1) throw std::invalid_argument("superiorize_conventional: N must be >= 1");
    PerturbationSchedule sched{cfg.alpha, cfg.gamma, -1};
    sched.validate();

    const auto t0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.variant = "conventional";
    rec.epsilon = run.epsilon;
    rec.alpha = cfg.alpha;
    rec.gamma = cfg.gamma;
    rec.status = Termination::safety_cap;

    Image x = x0;
    for (std::size_t k = 0; k < run.max_outer_iterations; ++k) {
        const double phi_ref = penalty.value(x);
        Image xn = x;
        double beta_total = 0.0;
        for (std::size_t n = 0; n < cfg.N; ++n) {
            Image g = penalty.gradient(xn);
            const double gnorm = vec::norm2(g.values());
            if (!(gnorm > 0.0) || !std::isfinite(gnorm)) {
                ++rec.skipped_perturbations;
                continue;
            }
            Image nu = std::move(g);
            for (double& v : nu.values()) v = -v / gnorm;
            const double nu_norm = vec::norm2(nu.values());

            bool accepted = false;
            for (std::size_t trial = 0; trial < cfg.max_trials; ++trial) {
                const double beta = sched.advance();
                Image z = xn;
                for (std::size_t j = 0; j < z.size(); ++j) z[j] += beta * nu[j];
                const double phi_z = penalty.value(z);
                if (phi_z < phi_ref) {
                    xn = std::move(z);
                    beta_total += beta;
                    rec.perturbations.push_back({k, n, sched.ell, beta, nu_norm, phi_ref, phi_z});
                    accepted = true;
                    break;
                }
            }
            if (!accepted) ++rec.skipped_perturbations;
        }
        x = basic.apply(xn);
        IterationRow row = detail::make_row(k + 1, x, basic.proximity(x), opt);
        row.ell = sched.ell;
        row.beta = beta_total;
        row.gate_fired = true;
        rec.rows.push_back(row);
        if (opt.observer) opt.observer(k + 1, x);
        if (row.proximity < run.epsilon) {
            rec.status = Termination::epsilon_compatible;
            break;
        }
    }
    rec.final_image = std::move(x);
    rec.runtime_seconds = detail::elapsed_since(t0);
    return rec;
}

/// Superiorization with adaptive step size: one step toward the phi level set
/// {phi <= alpha_k} per sweep, the level updated from the desirability number.
template <BasicAlgorithm B, Penalty P>
RunRecord superiorize_adaptive(const B& basic, const P& penalty, const Image& x0, const AdaptiveConfig& cfg,
                               const SuperiorizedRunConfig& run, const RunOptions& opt = {}) {
    run.validate();
    if (!(cfg.alpha0 > 0.0) || !(cfg.epsilon_inc > 0.0))
        throw std::invalid_argument("superiorize_adaptive: alpha0 and epsilon_inc must be > 0");

    const auto t0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.variant = "adaptive";
    rec.epsilon = run.epsilon;
    rec.status = Termination::safety_cap;

    Image x = x0;
    double level = cfg.alpha0;
    double pr_x = basic.proximity(x);
    if (pr_x == 0.0) {
        rec.rows.push_back(detail::make_row(0, x, pr_x, opt));
        rec.status = Termination::not_run;
        rec.final_image = std::move(x);
        return rec;
    }
    for (std::size_t k = 0; k < run.max_outer_iterations; ++k) {
        const double phi = penalty.value(x);
        Image g = penalty.gradient(x);
        const double gnorm = vec::norm2(g.values());
        if (phi < level) ++rec.zero_beta_steps;
        const double beta = adaptive_step_size(phi, level, gnorm);

        Image z = x;
        if (beta > 0.0) {
            Image nu = std::move(g);
            for (double& v : nu.values()) v = -v / gnorm;
            for (std::size_t j = 0; j < z.size(); ++j) z[j] += beta * nu[j];
            rec.perturbations.push_back({k, 0, -1, beta, vec::norm2(nu.values()), phi, penalty.value(z)});
        }
        const double pr_z = beta > 0.0 ? basic.proximity(z) : pr_x;
        level = next_level(level, cfg.epsilon_inc, desirability(pr_z, pr_x), cfg.noisy_mode);

        x = basic.apply(z);
        pr_x = basic.proximity(x);
        IterationRow row = detail::make_row(k + 1, x, pr_x, opt);
        row.beta = beta;
        row.gate_fired = beta > 0.0;
        rec.rows.push_back(row);
        if (opt.observer) opt.observer(k + 1, x);
        if (pr_x < run.epsilon) {
            rec.status = Termination::epsilon_compatible;
            break;
        }
        if (pr_x == 0.0) {
            rec.status = Termination::not_run;
            break;
        }
    }
    rec.final_image = std::move(x);
    rec.runtime_seconds = detail::elapsed_since(t0);
    return rec;
}

/// Plug-and-play superiorization. On gated iterations the displacement
/// v = Psi(x) - x is applied with step min(alpha gamma^ell, ||v||); ell
/// advances on every gated iteration, including those where v = 0.
template <BasicAlgorithm B, class Psi>
    requires std::invocable<const Psi&, const Image&>
RunRecord superiorize_pnp(const B& basic, const Psi& psi, const Image& x0, const PnPConfig& cfg,
                          const SuperiorizedRunConfig& run, const RunOptions& opt = {}) {
    run.validate();
    if (cfg.k_step < 1) throw std::invalid_argument("superiorize_pnp: k_step must be >= 1");
    if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw std::invalid_argument("superiorize_pnp: gamma must lie in (0, 1)");
    if (cfg.alpha && !(*cfg.alpha > 0.0)) throw std::invalid_argument("superiorize_pnp: alpha must be > 0");

    const auto t0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.variant = "pnp";
    rec.epsilon = run.epsilon;
    rec.gamma = cfg.gamma;
    rec.status = Termination::safety_cap;
    std::optional<double> alpha = cfg.alpha;
    long long ell = -1;

    Image x = x0;
    for (std::size_t k = 0; k < run.max_outer_iterations; ++k) {
        const bool gated = cfg.gate(k);
        double beta = 0.0;
        Image x_plus;
        if (gated) {
            const Image z = psi(x);
            if (!z.same_shape(x)) throw DimensionError("superiorize_pnp: Psi changed the image shape");
            ++ell;
            if (!alpha) {
                const double vn = displacement_norm(x, z);
                if (vn > 0.0) alpha = vn;
            }
            const double mu = alpha ? *alpha * std::pow(cfg.gamma, static_cast<double>(ell)) : 0.0;
            DampedStep step = damped_step(x, z, mu);
            if (step.v_norm == 0.0 || step.beta == 0.0) {
                ++rec.skipped_perturbations;
                x_plus = std::move(step.x_plus);
            } else {
                beta = step.beta;
                // ||v/||v|| ||, recomputed for the unit-direction contract.
                double nn = 0.0;
                for (std::size_t j = 0; j < x.size(); ++j) {
                    const double d = (z[j] - x[j]) / step.v_norm;
                    nn += d * d;
                }
                rec.perturbations.push_back(
                    {k, 0, ell, beta, std::sqrt(nn), tv_value(x, opt.tv), tv_value(step.x_plus, opt.tv)});
                x_plus = std::move(step.x_plus);
            }
        } else {
            x_plus = x;
        }
        x = basic.apply(x_plus);
        IterationRow row = detail::make_row(k + 1, x, basic.proximity(x), opt);
        row.ell = ell;
        row.beta = beta;
        row.gate_fired = gated;
        rec.rows.push_back(row);
        if (opt.observer) opt.observer(k + 1, x);
        if (row.proximity < run.epsilon) {
            rec.status = Termination::epsilon_compatible;
            break;
        }
    }
    rec.alpha = alpha.value_or(std::numeric_limits<double>::quiet_NaN());
    rec.final_image = std::move(x);
    rec.runtime_seconds = detail::elapsed_since(t0);
    return rec;
}

}  // namespace supct
