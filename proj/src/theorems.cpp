#include "wdm/theorems.hpp"

#include <algorithm>
#include <cmath>

#include "wdm/errors.hpp"
#include "wdm/rng.hpp"

namespace wdm {

MomentCheck mc_check_composition(const MdpConfig& cfg, const NoiseSchedule& sched,
                                 const Tensor& x0, int t, int n, std::uint64_t seed) {
    if (n < 1000) throw ParameterError("mc_check_composition: n must be >= 1000");
    sched.check_step(t);
    std::size_t d = x0.size();
    auto x0v = x0.data();

    // Per-step coefficients hoisted out of the chain loop.
    std::vector<double> ra(t), cn(t);
    std::vector<std::span<const double>> phis(t);
    for (int s = 1; s <= t; ++s) {
        ra[s - 1] = std::sqrt(sched.alpha(s));
        cn[s - 1] = cfg.eta * std::sqrt(1.0 - sched.alpha(s));
        phis[s - 1] = cfg.phi_at(s).data();
        if (phis[s - 1].size() != d)
            throw DimensionError("mc_check_composition: phi dim mismatch");
    }

    Rng rng(seed);
    std::vector<double> sum(d, 0.0), sumsq(d, 0.0), x(d);
    for (int chain = 0; chain < n; ++chain) {
        for (std::size_t j = 0; j < d; ++j) x[j] = x0v[j];
        for (int s = 0; s < t; ++s) {
            for (std::size_t j = 0; j < d; ++j)
                x[j] = ra[s] * (x[j] + phis[s][j]) + cn[s] * rng.normal();
        }
        for (std::size_t j = 0; j < d; ++j) {
            sum[j] += x[j];
            sumsq[j] += x[j] * x[j];
        }
    }

    MomentCheck mc;
    mc.t = t;
    mc.n = n;
    double ab = sched.alpha_bar(t);
    double c0 = std::sqrt(ab);
    auto tphi = cfg.tilde_phi_at(t).data();
    mc.closed_var = cfg.eta * cfg.eta * (1.0 - ab);
    double nn = static_cast<double>(n);
    mc.mean_se = std::sqrt(mc.closed_var / nn);
    mc.var_se = mc.closed_var * std::sqrt(2.0 / (nn - 1.0));
    mc.closed_mean.resize(d);
    mc.empirical_mean.resize(d);
    mc.empirical_var.resize(d);
    mc.pass = true;
    for (std::size_t j = 0; j < d; ++j) {
        mc.closed_mean[j] = c0 * x0v[j] + tphi[j];
        mc.empirical_mean[j] = sum[j] / nn;
        mc.empirical_var[j] =
            (sumsq[j] - nn * mc.empirical_mean[j] * mc.empirical_mean[j]) / (nn - 1.0);
        double mdev = std::fabs(mc.empirical_mean[j] - mc.closed_mean[j]) / mc.mean_se;
        double vdev = std::fabs(mc.empirical_var[j] - mc.closed_var) / mc.var_se;
        mc.max_mean_dev_se = std::max(mc.max_mean_dev_se, mdev);
        mc.max_var_dev_se = std::max(mc.max_var_dev_se, vdev);
    }
    if (mc.max_mean_dev_se > 4.0 || mc.max_var_dev_se > 4.0) mc.pass = false;
    return mc;
}

double check_wdp_mdp_equivalence(const NoiseSchedule& sched, const Tensor& b,
                                 double gamma1, const Tensor& x0, int t,
                                 const Tensor& eps) {
    MdpConfig cfg = mdp_params_for_wdp(sched, b, gamma1);
    Tensor lhs = wdp_state(forward_sample(x0, t, eps, sched), b, gamma1);
    // The equivalent drifted process starts from the mixed initial state.
    Tensor x0_mixed = wdp_state(x0, b, gamma1);
    Tensor rhs = mdp_composed_sample(x0_mixed, t, cfg, sched, eps);
    double res = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i)
        res = std::max(res, std::fabs(lhs.at(i) - rhs.at(i)));
    return res;
}

double check_shared_noise(const Tensor& x0, const Tensor& b, double gamma1,
                          const NoiseSchedule& sched, int t, const Tensor& eps) {
    sched.check_step(t);
    double ab = sched.alpha_bar(t);
    if (!(ab < 1.0))
        throw ParameterError("check_shared_noise: alpha_bar = 1 makes the inversion "
                             "undefined");
    MdpConfig cfg = mdp_params_for_wdp(sched, b, gamma1);
    Tensor x_t = forward_sample(x0, t, eps, sched);
    Tensor tilde_x0 = wdp_state(x0, b, gamma1);
    Tensor tilde_xt = wdp_state(x_t, b, gamma1);

    double c0 = std::sqrt(ab), ce = std::sqrt(1.0 - ab);
    auto tphi = cfg.tilde_phi_at(t).data();
    double res = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        double eps_plain = (x_t.at(i) - c0 * x0.at(i)) / ce;
        double eps_mixed =
            (tilde_xt.at(i) - c0 * tilde_x0.at(i) - tphi[i]) / (cfg.eta * ce);
        res = std::max(res, std::fabs(eps_plain - eps_mixed));
    }
    return res;
}

DivergenceGap divergence_gap(const Tensor& x_t, const Tensor& eps, const Tensor& b,
                             double gamma1, const NoiseSchedule& sched, int t) {
    sched.check_step(t);
    if (x_t.shape() != eps.shape() || x_t.shape() != b.shape())
        throw DimensionError("divergence_gap: shape mismatch");
    if (!(gamma1 > 0.0 && gamma1 <= 1.0))
        throw ParameterError("divergence_gap: gamma1 must lie in (0,1]");
    double a = sched.alpha(t);
    double ab = sched.alpha_bar(t);
    double inv_ra = 1.0 / std::sqrt(a);
    double c = (1.0 - a) / std::sqrt(1.0 - ab);

    DivergenceGap out;
    std::vector<double> gap(x_t.size());
    for (std::size_t i = 0; i < gap.size(); ++i) {
        double xi = x_t.at(i), ei = eps.at(i), bi = b.at(i);
        gap[i] = inv_ra * (xi - c * ei - bi) * (1.0 - gamma1);

        // Direct route: evaluate the two reverse means and subtract.
        double tilde_x = gamma1 * xi + (1.0 - gamma1) * bi;
        double mu_mixed = inv_ra * (tilde_x - gamma1 * c * ei) +
                          (1.0 - inv_ra) * (1.0 - gamma1) * bi;
        double mu_plain = inv_ra * (xi - c * ei);
        double direct = mu_mixed - mu_plain;
        // Exact closed form of the same difference.
        double exact = (1.0 - gamma1) * (bi - inv_ra * (xi - c * ei));
        out.identity_residual = std::max(out.identity_residual,
                                         std::fabs(direct - exact));
        out.formula_correction = std::max(out.formula_correction,
                                          std::fabs(gap[i] + direct));
    }
    out.gap = Tensor(x_t.shape(), std::move(gap));
    return out;
}

bool ProofReport::all_ok() const {
    for (const auto& c : checks) {
        if (c.is_negative_control ? c.pass : !c.pass) return false;
    }
    return true;
}

ProofReport run_proof_suite(std::uint64_t seed) {
    ProofReport rep;
    NoiseSchedule sched = linear_schedule(100, 1e-4, 0.02);
    Rng rng(seed);

    auto random_vec = [&](std::size_t d, double lo, double hi) {
        return Tensor::from_vector(rng.uniform_vec(d, lo, hi));
    };
    auto random_normal = [&](std::size_t d) {
        return Tensor::from_vector(rng.normal_vec(d));
    };

    {
        ProofCheck c;
        c.name = "wdp-mdp-equivalence (1000 random configs)";
        c.threshold = 1e-10;
        for (int i = 0; i < 1000; ++i) {
            std::size_t d = 1 + static_cast<std::size_t>(rng.uniform_int(0, 3));
            double g1 = rng.uniform(0.05, 0.95);
            int t = static_cast<int>(rng.uniform_int(1, sched.T));
            double r = check_wdp_mdp_equivalence(sched, random_vec(d, -2, 2), g1,
                                                 random_normal(d), t, random_normal(d));
            c.statistic = std::max(c.statistic, r);
        }
        c.pass = c.statistic < c.threshold;
        rep.checks.push_back(std::move(c));
    }

    {
        ProofCheck c;
        c.name = "shared-reverse-noise (1000 random configs)";
        c.threshold = 1e-10;
        for (int i = 0; i < 1000; ++i) {
            std::size_t d = 1 + static_cast<std::size_t>(rng.uniform_int(0, 3));
            double g1 = rng.uniform(0.05, 0.95);
            int t = static_cast<int>(rng.uniform_int(1, sched.T));
            double r = check_shared_noise(random_normal(d), random_vec(d, -2, 2), g1,
                                          sched, t, random_normal(d));
            c.statistic = std::max(c.statistic, r);
        }
        c.pass = c.statistic < c.threshold;
        rep.checks.push_back(std::move(c));
    }

    {
        // Cumulative drift recurrence against its explicit closed form for
        // the trigger-mixed configuration, at full production depth.
        ProofCheck c;
        c.name = "cumulative-drift recurrence vs closed form (T=1000)";
        c.threshold = 1e-12;
        NoiseSchedule long_sched = linear_schedule(1000, 1e-4, 0.02);
        Tensor b = Tensor::from_vector({1.5, -0.7});
        double g1 = 0.8;
        MdpConfig cfg = mdp_params_for_wdp(long_sched, b, g1);
        for (int t = 1; t <= long_sched.T; ++t) {
            double want = (1.0 - std::sqrt(long_sched.alpha_bar(t))) * (1.0 - g1);
            for (std::size_t j = 0; j < b.size(); ++j) {
                double got = cfg.tilde_phi_at(t).at(j);
                c.statistic = std::max(c.statistic, std::fabs(got - want * b.at(j)));
            }
        }
        c.pass = c.statistic < c.threshold;
        rep.checks.push_back(std::move(c));
    }

    {
        ProofCheck c;
        c.name = "reverse-mean divergence identity (200 random configs)";
        c.threshold = 1e-10;
        double worst_corr_err = 0.0;
        for (int i = 0; i < 200; ++i) {
            std::size_t d = 1 + static_cast<std::size_t>(rng.uniform_int(0, 2));
            double g1 = rng.uniform(0.05, 0.95);
            int t = static_cast<int>(rng.uniform_int(1, sched.T));
            Tensor b = random_vec(d, -2, 2);
            DivergenceGap g = divergence_gap(random_normal(d), random_normal(d), b, g1,
                                             sched, t);
            c.statistic = std::max(c.statistic, g.identity_residual);
            // The printed form must deviate from the direct difference by
            // exactly the trigger correction.
            double maxb = 0.0;
            for (std::size_t j = 0; j < d; ++j) maxb = std::max(maxb, std::fabs(b.at(j)));
            double bound = (1.0 - g1) * std::fabs(1.0 / std::sqrt(sched.alpha(t)) - 1.0) * maxb;
            worst_corr_err = std::max(worst_corr_err,
                                      std::fabs(g.formula_correction - bound));
        }
        c.statistic = std::max(c.statistic, worst_corr_err);
        c.pass = c.statistic < c.threshold;
        rep.checks.push_back(std::move(c));
    }

    {
        ProofCheck c;
        c.name = "monte-carlo kernel composition (20 configs, n=1e5)";
        c.threshold = 4.0;
        for (int i = 0; i < 20; ++i) {
            std::size_t d = 1;
            int t = static_cast<int>(rng.uniform_int(2, sched.T));
            MdpConfig cfg;
            if (i % 2 == 0) {
                cfg = mdp_params_for_wdp(sched, random_vec(d, -2, 2),
                                         rng.uniform(0.3, 0.95));
            } else {
                std::vector<Tensor> phis;
                for (int s = 0; s < sched.T; ++s) phis.push_back(random_vec(d, -0.05, 0.05));
                cfg = mdp_config_from_phis(std::move(phis), rng.uniform(0.3, 1.0), sched);
            }
            MomentCheck mc = mc_check_composition(cfg, sched, random_normal(d), t, 100000,
                                                  rng.next_u64());
            c.statistic = std::max(c.statistic,
                                   std::max(mc.max_mean_dev_se, mc.max_var_dev_se));
        }
        c.pass = c.statistic < c.threshold;
        rep.checks.push_back(std::move(c));
    }

    {
        ProofCheck c;
        c.name = "negative control: eta set to gamma1^2";
        c.is_negative_control = true;
        c.threshold = 1e-10;
        Tensor b = Tensor::from_vector({1.0});
        double g1 = 0.8;
        MdpConfig cfg = mdp_params_for_wdp(sched, b, g1);
        cfg.eta = g1 * g1;
        Tensor x0 = Tensor::from_vector({0.5});
        Tensor eps = Tensor::from_vector({1.0});
        int t = 80;
        Tensor lhs = wdp_state(forward_sample(x0, t, eps, sched), b, g1);
        Tensor rhs = mdp_composed_sample(wdp_state(x0, b, g1), t, cfg, sched, eps);
        c.statistic = std::fabs(lhs.at(0) - rhs.at(0));
        c.pass = c.statistic < c.threshold;  // expected NOT to pass
        rep.checks.push_back(std::move(c));
    }

    {
        ProofCheck c;
        c.name = "negative control: trigger perturbed between construction and inversion";
        c.is_negative_control = true;
        c.threshold = 1e-10;
        Tensor x0 = Tensor::from_vector({0.3});
        Tensor b = Tensor::from_vector({1.2});
        Tensor b_shifted = Tensor::from_vector({1.2 + 0.1});
        double g1 = 0.8;
        int t = 60;
        Tensor eps = Tensor::from_vector({0.7});
        MdpConfig cfg = mdp_params_for_wdp(sched, b, g1);
        double ab = sched.alpha_bar(t);
        double c0 = std::sqrt(ab), ce = std::sqrt(1.0 - ab);
        Tensor x_t = forward_sample(x0, t, eps, sched);
        // Invert with the wrong trigger.
        Tensor tilde_x0 = wdp_state(x0, b_shifted, g1);
        Tensor tilde_xt = wdp_state(x_t, b_shifted, g1);
        double eps_plain = (x_t.at(0) - c0 * x0.at(0)) / ce;
        double eps_mixed =
            (tilde_xt.at(0) - c0 * tilde_x0.at(0) - cfg.tilde_phi_at(t).at(0)) /
            (cfg.eta * ce);
        c.statistic = std::fabs(eps_plain - eps_mixed);
        c.pass = c.statistic < c.threshold;
        rep.checks.push_back(std::move(c));
    }

    {
        ProofCheck c;
        c.name = "negative control: cumulative drift off by 10%";
        c.is_negative_control = true;
        c.threshold = 4.0;
        Tensor b = Tensor::from_vector({2.0});
        double g1 = 0.5;
        MdpConfig cfg = mdp_params_for_wdp(sched, b, g1);
        for (auto& tp : cfg.tilde_phi) {
            auto w = tp.mutable_data();
            for (auto& v : w) v *= 1.1;
        }
        MomentCheck mc = mc_check_composition(cfg, sched, Tensor::from_vector({1.0}),
                                              sched.T, 100000, rng.next_u64());
        c.statistic = std::max(mc.max_mean_dev_se, mc.max_var_dev_se);
        c.pass = c.statistic < c.threshold;
        rep.checks.push_back(std::move(c));
    }

    return rep;
}

}  // namespace wdm
