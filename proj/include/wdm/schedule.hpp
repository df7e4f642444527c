#ifndef WDM_SCHEDULE_HPP
#define WDM_SCHEDULE_HPP

#include <vector>

#include "wdm/tensor.hpp"

namespace wdm {

// Per-timestep diffusion constants. All arrays are length T and addressed
// with 1-based step indices t in [1, T].
struct NoiseSchedule {
    int T = 0;
    std::vector<double> betas;
    std::vector<double> alphas;      // alpha_t = 1 - beta_t
    std::vector<double> alpha_bars;  // cumulative product of alphas
    std::vector<double> sigmas;      // reverse-step std, sqrt(beta_t)

    double beta(int t) const;
    double alpha(int t) const;
    double alpha_bar(int t) const;
    double sigma(int t) const;
    void check_step(int t) const;  // throws ParameterError if t outside [1, T]
};

// Betas interpolated linearly from beta_1 to beta_T inclusive.
NoiseSchedule linear_schedule(int T, double beta_1, double beta_T);

// Direct injection of an arbitrary beta sequence (each in (0,1)).
NoiseSchedule schedule_from_betas(std::vector<double> betas);

// Drifted-kernel process parameters: per-step drift phi_t, noise scale eta,
// and the cumulative drift tilde_phi_t satisfying
// tilde_phi_t = sqrt(alpha_t) * (tilde_phi_{t-1} + phi_t), tilde_phi_0 = 0.
struct MdpConfig {
    std::vector<Tensor> phi;        // length T, phi[t-1] is the step-t drift
    double eta = 1.0;
    std::vector<Tensor> tilde_phi;  // length T, cumulative drifts

    const Tensor& phi_at(int t) const;
    const Tensor& tilde_phi_at(int t) const;
};

// Builds the cumulative drifts from per-step drifts via the recurrence.
MdpConfig mdp_config_from_phis(std::vector<Tensor> phis, double eta,
                               const NoiseSchedule& sched);

// The drifted-kernel configuration equivalent to the trigger-mixed process:
// phi_t = (1/sqrt(alpha_t) - 1) (1 - gamma1) b,  eta = gamma1.
// The cumulative drifts come out as (1 - sqrt(alpha_bar_t)) (1 - gamma1) b.
MdpConfig mdp_params_for_wdp(const NoiseSchedule& sched, const Tensor& b, double gamma1);

// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps
Tensor forward_sample(const Tensor& x0, int t, const Tensor& eps,
                      const NoiseSchedule& sched);

// Trigger-mixed state: gamma1 * x_t + (1 - gamma1) * b.
// gamma1 = 1 is allowed (degenerate identity) for testing.
Tensor wdp_state(const Tensor& x_t, const Tensor& b, double gamma1);

// One forward step of the drifted kernel:
// sqrt(alpha_t) (x_{t-1} + phi_t) + eta sqrt(1 - alpha_t) eps
Tensor mdp_forward_step(const Tensor& x_prev, int t, const MdpConfig& cfg,
                        const NoiseSchedule& sched, const Tensor& eps);

// Composed t-step state in closed form:
// sqrt(alpha_bar_t) x0 + tilde_phi_t + eta sqrt(1 - alpha_bar_t) eps
Tensor mdp_composed_sample(const Tensor& x0, int t, const MdpConfig& cfg,
                           const NoiseSchedule& sched, const Tensor& eps);

// Ancestral reverse update:
// (1/sqrt(alpha_t)) (x_t - (1-alpha_t)/sqrt(1-alpha_bar_t) eps_pred) + sigma_t z
// The caller must pass z = 0 at t = 1.
Tensor reverse_step(const Tensor& x_t, const Tensor& eps_pred, int t,
                    const NoiseSchedule& sched, const Tensor& z);

struct PosteriorStats {
    Tensor mean;
    double var = 0.0;
    // Constant term of the epsilon-form mean; training drops it but the
    // posterior cross-check uses it.
    Tensor c_t;
};

// Reverse posterior q(x_{t-1} | x_t, x0) of the drifted kernel, t >= 2:
//   var  = eta^2 (1 - alpha_bar_{t-1}) (1 - alpha_t) / (1 - alpha_bar_t)
//   mean = A x_t + B x0 + D phi_t + E tilde_phi_{t-1}
// with the standard DDPM coefficients recovered when phi = 0, eta = 1.
PosteriorStats mdp_posterior(const Tensor& x_t, const Tensor& x0, int t,
                             const MdpConfig& cfg, const NoiseSchedule& sched);

}  // namespace wdm

#endif
