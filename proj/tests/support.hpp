#ifndef WDM_TESTS_SUPPORT_HPP
#define WDM_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "wdm/dataset.hpp"
#include "wdm/rng.hpp"
#include "wdm/schedule.hpp"
#include "wdm/tensor.hpp"

namespace wdm::testing {

// ---------------------------------------------------------------------------
// Random scalar computation graphs for gradient soundness checks.
//
// A graph is a replayable program over a set of leaf vectors, so the same
// computation can be re-evaluated at perturbed leaf values for central
// finite differences.
// ---------------------------------------------------------------------------
struct RandomGraph {
    enum class Op { Add, Sub, Mul, Silu };
    struct Step {
        Op op;
        int lhs;  // node index
        int rhs;  // node index (unused for Silu)
    };

    std::size_t n_leaves = 0;
    std::size_t dim = 0;
    std::vector<Step> steps;

    static RandomGraph random(Rng& rng, std::size_t max_depth = 5) {
        RandomGraph g;
        g.n_leaves = 2 + static_cast<std::size_t>(rng.uniform_int(0, 6));
        g.dim = 1 + static_cast<std::size_t>(rng.uniform_int(0, 7));
        std::size_t depth = 1 + static_cast<std::size_t>(
                                rng.uniform_int(0, static_cast<int>(max_depth) - 1));
        int n_nodes = static_cast<int>(g.n_leaves);
        for (std::size_t s = 0; s < depth; ++s) {
            Step st;
            st.op = static_cast<Op>(rng.uniform_int(0, 3));
            st.lhs = static_cast<int>(rng.uniform_int(0, n_nodes - 1));
            st.rhs = static_cast<int>(rng.uniform_int(0, n_nodes - 1));
            g.steps.push_back(st);
            ++n_nodes;
        }
        return g;
    }

    // Differentiable evaluation; returns the scalar loss.
    Tensor build(const std::vector<Tensor>& leaves) const {
        std::vector<Tensor> nodes = leaves;
        for (const auto& st : steps) {
            switch (st.op) {
                case Op::Add: nodes.push_back(add(nodes[st.lhs], nodes[st.rhs])); break;
                case Op::Sub: nodes.push_back(sub(nodes[st.lhs], nodes[st.rhs])); break;
                case Op::Mul: nodes.push_back(mul(nodes[st.lhs], nodes[st.rhs])); break;
                case Op::Silu: nodes.push_back(silu(nodes[st.lhs])); break;
            }
        }
        return sum(nodes.back());
    }

    // Value-only evaluation at explicit leaf values (for finite differences).
    double value(const std::vector<std::vector<double>>& leaf_values) const {
        std::vector<std::vector<double>> nodes = leaf_values;
        auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
        for (const auto& st : steps) {
            const auto& a = nodes[st.lhs];
            std::vector<double> out(a.size());
            switch (st.op) {
                case Op::Add:
                    for (std::size_t i = 0; i < out.size(); ++i)
                        out[i] = a[i] + nodes[st.rhs][i];
                    break;
                case Op::Sub:
                    for (std::size_t i = 0; i < out.size(); ++i)
                        out[i] = a[i] - nodes[st.rhs][i];
                    break;
                case Op::Mul:
                    for (std::size_t i = 0; i < out.size(); ++i)
                        out[i] = a[i] * nodes[st.rhs][i];
                    break;
                case Op::Silu:
                    for (std::size_t i = 0; i < out.size(); ++i)
                        out[i] = a[i] * sigmoid(a[i]);
                    break;
            }
            nodes.push_back(std::move(out));
        }
        double acc = 0.0;
        for (double v : nodes.back()) acc += v;
        return acc;
    }
};

// Worst relative error between analytic gradients and central differences
// over every element of every leaf.
inline double gradient_vs_fd(const RandomGraph& g, std::vector<std::vector<double>> vals,
                             double h = 1e-5) {
    std::vector<Tensor> leaves;
    for (const auto& v : vals) leaves.push_back(Tensor::from_vector(v, true));
    Tensor loss = g.build(leaves);
    for (auto& l : leaves) l.zero_grad();
    backward(loss);

    double worst = 0.0;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        auto grad = leaves[li].grad();
        for (std::size_t i = 0; i < grad.size(); ++i) {
            double keep = vals[li][i];
            vals[li][i] = keep + h;
            double up = g.value(vals);
            vals[li][i] = keep - h;
            double dn = g.value(vals);
            vals[li][i] = keep;
            double fd = (up - dn) / (2.0 * h);
            double denom = std::max({std::fabs(fd), std::fabs(grad[i]), 1e-6});
            worst = std::max(worst, std::fabs(fd - grad[i]) / denom);
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// 1-D grid-quadrature oracle for the drifted-kernel reverse posterior:
// multiplies the two Gaussian factors of Bayes' rule on a fine grid and
// reads off the normalized mean and variance.
// ---------------------------------------------------------------------------
struct GridPosterior {
    double mean = 0.0;
    double var = 0.0;
};

inline GridPosterior grid_posterior_oracle(double x_t, double x0, int t,
                                           const MdpConfig& cfg,
                                           const NoiseSchedule& sched,
                                           int points = 20001) {
    double a = sched.alpha(t);
    double ab_prev = sched.alpha_bar(t - 1);
    double eta2 = cfg.eta * cfg.eta;
    double phi_t = cfg.phi_at(t).at(0);
    double tphi_prev = cfg.tilde_phi_at(t - 1).at(0);

    double like_mean = x_t / std::sqrt(a) - phi_t;          // from x_t = sqrt(a)(y+phi)+noise
    double like_sd = std::sqrt(eta2 * (1.0 - a) / a);
    double prior_mean = std::sqrt(ab_prev) * x0 + tphi_prev;
    double prior_sd = std::sqrt(eta2 * (1.0 - ab_prev));

    double lo = std::min(like_mean - 10.0 * like_sd, prior_mean - 10.0 * prior_sd);
    double hi = std::max(like_mean + 10.0 * like_sd, prior_mean + 10.0 * prior_sd);
    double step = (hi - lo) / (points - 1);

    std::vector<double> logw(points);
    double logw_max = -1e300;
    for (int i = 0; i < points; ++i) {
        double y = lo + i * step;
        double d1 = (x_t - std::sqrt(a) * (y + phi_t));
        double d2 = (y - prior_mean);
        logw[i] = -0.5 * d1 * d1 / (eta2 * (1.0 - a)) -
                  0.5 * d2 * d2 / (eta2 * (1.0 - ab_prev));
        logw_max = std::max(logw_max, logw[i]);
    }
    double z = 0.0, m1 = 0.0;
    for (int i = 0; i < points; ++i) {
        double w = std::exp(logw[i] - logw_max);
        z += w;
        m1 += w * (lo + i * step);
    }
    double mean = m1 / z;
    double m2 = 0.0;
    for (int i = 0; i < points; ++i) {
        double y = lo + i * step;
        m2 += std::exp(logw[i] - logw_max) * (y - mean) * (y - mean);
    }
    GridPosterior gp;
    gp.mean = mean;
    gp.var = m2 / z;
    return gp;
}

// ---------------------------------------------------------------------------
// Toy data
// ---------------------------------------------------------------------------

// Ring of radius r with small radial jitter, in [-1, 1]^2.
inline Dataset ring_dataset(std::size_t n, std::uint64_t seed, double radius = 0.8,
                            double jitter = 0.03) {
    Rng rng(seed);
    Dataset ds;
    ds.sample_shape = {2};
    ds.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double th = rng.uniform(0.0, 2.0 * M_PI);
        double r = radius + jitter * rng.normal();
        ds.samples.push_back({r * std::cos(th), r * std::sin(th)});
    }
    return ds;
}

inline Dataset gaussian_dataset_1d(std::size_t n, std::uint64_t seed, double mean = 0.0,
                                   double sd = 1.0) {
    Rng rng(seed);
    Dataset ds;
    ds.sample_shape = {1};
    ds.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ds.samples.push_back({rng.normal(mean, sd)});
    return ds;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace wdm::testing

#endif
