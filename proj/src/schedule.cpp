#include "wdm/schedule.hpp"

#include <cmath>

#include "wdm/errors.hpp"

namespace wdm {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(what) + ": shape mismatch");
}

}  // namespace

double NoiseSchedule::beta(int t) const {
    check_step(t);
    return betas[t - 1];
}

double NoiseSchedule::alpha(int t) const {
    check_step(t);
    return alphas[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
    check_step(t);
    return alpha_bars[t - 1];
}

double NoiseSchedule::sigma(int t) const {
    check_step(t);
    return sigmas[t - 1];
}

void NoiseSchedule::check_step(int t) const {
    if (t < 1 || t > T)
        throw ParameterError("step index " + std::to_string(t) + " outside [1, " +
                             std::to_string(T) + "]");
}

NoiseSchedule schedule_from_betas(std::vector<double> betas) {
    if (betas.empty()) throw ParameterError("schedule: T must be >= 1");
    NoiseSchedule s;
    s.T = static_cast<int>(betas.size());
    s.betas = std::move(betas);
    s.alphas.resize(s.T);
    s.alpha_bars.resize(s.T);
    s.sigmas.resize(s.T);
    double prod = 1.0;
    for (int i = 0; i < s.T; ++i) {
        double b = s.betas[i];
        if (!(b > 0.0 && b < 1.0))
            throw ParameterError("schedule: beta_" + std::to_string(i + 1) +
                                 " = " + std::to_string(b) + " outside (0,1)");
        s.alphas[i] = 1.0 - b;
        prod *= s.alphas[i];
        s.alpha_bars[i] = prod;
        s.sigmas[i] = std::sqrt(b);
    }
    return s;
}

NoiseSchedule linear_schedule(int T, double beta_1, double beta_T) {
    if (T < 1) throw ParameterError("linear_schedule: T must be >= 1");
    if (!(beta_1 > 0.0 && beta_1 <= beta_T && beta_T < 1.0))
        throw ParameterError("linear_schedule: require 0 < beta_1 <= beta_T < 1");
    std::vector<double> betas(T);
    if (T == 1) {
        betas[0] = beta_1;
    } else {
        for (int i = 0; i < T; ++i)
            betas[i] = beta_1 + (beta_T - beta_1) * static_cast<double>(i) /
                                    static_cast<double>(T - 1);
    }
    return schedule_from_betas(std::move(betas));
}

const Tensor& MdpConfig::phi_at(int t) const {
    if (t < 1 || t > static_cast<int>(phi.size()))
        throw ParameterError("MdpConfig: step index out of range");
    return phi[t - 1];
}

const Tensor& MdpConfig::tilde_phi_at(int t) const {
    if (t < 1 || t > static_cast<int>(tilde_phi.size()))
        throw ParameterError("MdpConfig: step index out of range");
    return tilde_phi[t - 1];
}

MdpConfig mdp_config_from_phis(std::vector<Tensor> phis, double eta,
                               const NoiseSchedule& sched) {
    if (static_cast<int>(phis.size()) != sched.T)
        throw ParameterError("mdp_config_from_phis: need one phi per step");
    if (!(eta > 0.0 && eta <= 1.0))
        throw ParameterError("mdp_config_from_phis: eta outside (0,1]");
    MdpConfig cfg;
    cfg.eta = eta;
    cfg.tilde_phi.reserve(phis.size());
    std::vector<double> acc(phis[0].size(), 0.0);
    for (int t = 1; t <= sched.T; ++t) {
        const Tensor& p = phis[t - 1];
        if (p.shape() != phis[0].shape())
            throw DimensionError("mdp_config_from_phis: inconsistent phi shapes");
        double ra = std::sqrt(sched.alpha(t));
        auto pv = p.data();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = ra * (acc[i] + pv[i]);
        cfg.tilde_phi.emplace_back(p.shape(), acc);
    }
    cfg.phi = std::move(phis);
    return cfg;
}

MdpConfig mdp_params_for_wdp(const NoiseSchedule& sched, const Tensor& b, double gamma1) {
    if (!(gamma1 > 0.0 && gamma1 < 1.0))
        throw ParameterError("mdp_params_for_wdp: gamma1 must lie in (0,1)");
    std::vector<Tensor> phis;
    phis.reserve(sched.T);
    auto bv = b.data();
    for (int t = 1; t <= sched.T; ++t) {
        double c = (1.0 / std::sqrt(sched.alpha(t)) - 1.0) * (1.0 - gamma1);
        std::vector<double> pv(b.size());
        for (std::size_t i = 0; i < pv.size(); ++i) pv[i] = c * bv[i];
        phis.emplace_back(b.shape(), std::move(pv));
    }
    return mdp_config_from_phis(std::move(phis), gamma1, sched);
}

Tensor forward_sample(const Tensor& x0, int t, const Tensor& eps,
                      const NoiseSchedule& sched) {
    sched.check_step(t);
    check_same_shape(x0, eps, "forward_sample");
    double ab = sched.alpha_bar(t);
    double c0 = std::sqrt(ab), ce = std::sqrt(1.0 - ab);
    auto xv = x0.data();
    auto ev = eps.data();
    std::vector<double> out(x0.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c0 * xv[i] + ce * ev[i];
    return Tensor(x0.shape(), std::move(out));
}

Tensor wdp_state(const Tensor& x_t, const Tensor& b, double gamma1) {
    if (!(gamma1 > 0.0 && gamma1 <= 1.0))
        throw ParameterError("wdp_state: gamma1 must lie in (0,1]");
    check_same_shape(x_t, b, "wdp_state");
    auto xv = x_t.data();
    auto bv = b.data();
    std::vector<double> out(x_t.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = gamma1 * xv[i] + (1.0 - gamma1) * bv[i];
    return Tensor(x_t.shape(), std::move(out));
}

Tensor mdp_forward_step(const Tensor& x_prev, int t, const MdpConfig& cfg,
                        const NoiseSchedule& sched, const Tensor& eps) {
    sched.check_step(t);
    check_same_shape(x_prev, eps, "mdp_forward_step");
    const Tensor& phi = cfg.phi_at(t);
    check_same_shape(x_prev, phi, "mdp_forward_step (phi)");
    double a = sched.alpha(t);
    double ra = std::sqrt(a), cn = cfg.eta * std::sqrt(1.0 - a);
    auto xv = x_prev.data();
    auto pv = phi.data();
    auto ev = eps.data();
    std::vector<double> out(x_prev.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = ra * (xv[i] + pv[i]) + cn * ev[i];
    return Tensor(x_prev.shape(), std::move(out));
}

Tensor mdp_composed_sample(const Tensor& x0, int t, const MdpConfig& cfg,
                           const NoiseSchedule& sched, const Tensor& eps) {
    sched.check_step(t);
    check_same_shape(x0, eps, "mdp_composed_sample");
    const Tensor& tphi = cfg.tilde_phi_at(t);
    check_same_shape(x0, tphi, "mdp_composed_sample (tilde_phi)");
    double ab = sched.alpha_bar(t);
    double c0 = std::sqrt(ab), cn = cfg.eta * std::sqrt(1.0 - ab);
    auto xv = x0.data();
    auto tv = tphi.data();
    auto ev = eps.data();
    std::vector<double> out(x0.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = c0 * xv[i] + tv[i] + cn * ev[i];
    return Tensor(x0.shape(), std::move(out));
}

Tensor reverse_step(const Tensor& x_t, const Tensor& eps_pred, int t,
                    const NoiseSchedule& sched, const Tensor& z) {
    sched.check_step(t);
    check_same_shape(x_t, eps_pred, "reverse_step");
    check_same_shape(x_t, z, "reverse_step (z)");
    double a = sched.alpha(t), ab = sched.alpha_bar(t);
    double inv_ra = 1.0 / std::sqrt(a);
    double ce = (1.0 - a) / std::sqrt(1.0 - ab);
    double s = sched.sigma(t);
    auto xv = x_t.data();
    auto ev = eps_pred.data();
    auto zv = z.data();
    std::vector<double> out(x_t.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = inv_ra * (xv[i] - ce * ev[i]) + s * zv[i];
    return Tensor(x_t.shape(), std::move(out));
}

PosteriorStats mdp_posterior(const Tensor& x_t, const Tensor& x0, int t,
                             const MdpConfig& cfg, const NoiseSchedule& sched) {
    if (t < 2)
        throw ParameterError("mdp_posterior: t must be >= 2");
    sched.check_step(t);
    check_same_shape(x_t, x0, "mdp_posterior");
    double a = sched.alpha(t);
    double ab = sched.alpha_bar(t);
    double ab_prev = sched.alpha_bar(t - 1);
    double eta2 = cfg.eta * cfg.eta;

    PosteriorStats stats;
    stats.var = eta2 * (1.0 - ab_prev) * (1.0 - a) / (1.0 - ab);

    double A = std::sqrt(a) * (1.0 - ab_prev) / (1.0 - ab);
    double B = std::sqrt(ab_prev) * (1.0 - a) / (1.0 - ab);
    double D = (ab - a) / (1.0 - ab);
    double E = (1.0 - a) / (1.0 - ab);

    const Tensor& phi = cfg.phi_at(t);
    const Tensor& tphi_prev = cfg.tilde_phi_at(t - 1);
    const Tensor& tphi = cfg.tilde_phi_at(t);
    auto xv = x_t.data();
    auto x0v = x0.data();
    auto pv = phi.data();
    auto tpv = tphi_prev.data();
    auto tv = tphi.data();

    std::vector<double> mean(x_t.size());
    std::vector<double> c_t(x_t.size());
    // Constant of the epsilon-form mean: what remains after substituting
    // x0 = (x_t - tilde_phi_t - eta sqrt(1-ab) eps) / sqrt(ab).
    double F = -(1.0 - a) / ((1.0 - ab) * std::sqrt(a));
    for (std::size_t i = 0; i < mean.size(); ++i) {
        mean[i] = A * xv[i] + B * x0v[i] + D * pv[i] + E * tpv[i];
        c_t[i] = F * tv[i] + D * pv[i] + E * tpv[i];
    }
    stats.mean = Tensor(x_t.shape(), std::move(mean));
    stats.c_t = Tensor(x_t.shape(), std::move(c_t));
    return stats;
}

}  // namespace wdm
