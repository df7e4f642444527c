#include "wdm/verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "wdm/errors.hpp"

namespace wdm {

namespace {

// Continued fraction for the regularized incomplete beta (modified Lentz).
double incbeta_cf(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    constexpr int max_iter = 100000;
    auto numer = [x, a, b](int n) {
        if (n % 2 == 0) {
            double m = n / 2;
            return m * (b - m) * x / (a + 2.0 * m - 1.0) / (a + 2.0 * m);
        }
        double m = (n - 1) / 2;
        return -(a + m) * (a + b + m) * x / (a + 2.0 * m) / (a + 2.0 * m + 1.0);
    };
    double ret = 1.0;  // denominators are all 1
    double c = ret;
    double d = 0.0;
    for (int n = 1; n < max_iter; ++n) {
        double an = numer(n);
        d = 1.0 + an * d;
        if (d == 0.0) d = tiny;
        c = 1.0 + an / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        double mult = c * d;
        ret *= mult;
        if (std::fabs(mult - 1.0) <= eps) break;
    }
    return ret;
}

double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double regularized_incomplete_beta(double x, double a, double b) {
    if (!(x >= 0.0 && x <= 1.0 && a > 0.0 && b > 0.0))
        throw ParameterError("regularized incomplete beta: arguments out of domain");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double lx = std::log(x), ly = std::log1p(-x);
    if (x <= (a + 1.0) / (a + b + 2.0))
        return std::exp(lx * a + ly * b - log_beta(a, b)) / a / incbeta_cf(x, a, b);
    return 1.0 - std::exp(ly * b + lx * a - log_beta(a, b)) / b / incbeta_cf(1.0 - x, b, a);
}

void mean_var(std::span<const double> xs, double& mean, double& var) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= static_cast<double>(xs.size() - 1);
    mean = m;
    var = v;
}

// SipHash-2-4 of an 8-byte message (the counter), reference rotations.
struct SipHash {
    std::uint64_t v0, v1, v2, v3;

    static std::uint64_t rotl(std::uint64_t x, int b) {
        return (x << b) | (x >> (64 - b));
    }

    void round() {
        v0 += v1; v1 = rotl(v1, 13); v1 ^= v0; v0 = rotl(v0, 32);
        v2 += v3; v3 = rotl(v3, 16); v3 ^= v2;
        v0 += v3; v3 = rotl(v3, 21); v3 ^= v0;
        v2 += v1; v1 = rotl(v1, 17); v1 ^= v2; v2 = rotl(v2, 32);
    }

    SipHash(std::uint64_t k0, std::uint64_t k1) {
        v0 = 0x736f6d6570736575ULL ^ k0;
        v1 = 0x646f72616e646f6dULL ^ k1;
        v2 = 0x6c7967656e657261ULL ^ k0;
        v3 = 0x7465646279746573ULL ^ k1;
    }

    std::uint64_t hash_u64(std::uint64_t counter) const {
        SipHash s = *this;
        // one full 8-byte block followed by the length block (len = 8)
        s.v3 ^= counter;
        s.round(); s.round();
        s.v0 ^= counter;
        std::uint64_t blk = 8ULL << 56;
        s.v3 ^= blk;
        s.round(); s.round();
        s.v0 ^= blk;
        s.v2 ^= 0xFF;
        s.round(); s.round(); s.round(); s.round();
        return s.v0 ^ s.v1 ^ s.v2 ^ s.v3;
    }
};

}  // namespace

namespace detail {

std::uint64_t siphash24(std::uint64_t k0, std::uint64_t k1, std::uint64_t msg) {
    return SipHash(k0, k1).hash_u64(msg);
}

}  // namespace detail

double mse_similarity(const Tensor& a, const Tensor& a_hat) {
    if (a.shape() != a_hat.shape())
        throw DimensionError("mse_similarity: shape mismatch");
    auto av = a.data();
    auto bv = a_hat.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        double d = av[i] - bv[i];
        acc += d * d;
    }
    return acc / static_cast<double>(av.size());
}

double frechet_similarity(const std::vector<Tensor>& batch_a,
                          const std::vector<Tensor>& batch_b) {
    if (batch_a.size() < 2 || batch_b.size() < 2)
        throw StatisticalError("frechet_similarity: each batch needs >= 2 samples");
    std::size_t dim = batch_a[0].size();
    for (const auto& t : batch_a)
        if (t.size() != dim) throw DimensionError("frechet_similarity: ragged batch");
    for (const auto& t : batch_b)
        if (t.size() != dim) throw DimensionError("frechet_similarity: ragged batch");

    auto fit = [dim](const std::vector<Tensor>& batch, Eigen::VectorXd& mu,
                     Eigen::MatrixXd& cov) {
        std::size_t n = batch.size();
        Eigen::MatrixXd X(n, dim);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < dim; ++j) X(i, j) = batch[i].at(j);
        mu = X.colwise().mean();
        Eigen::MatrixXd centered = X.rowwise() - mu.transpose();
        cov = centered.transpose() * centered / static_cast<double>(n - 1);
        cov += 1e-6 * Eigen::MatrixXd::Identity(dim, dim);
    };

    Eigen::VectorXd mu1, mu2;
    Eigen::MatrixXd c1, c2;
    fit(batch_a, mu1, c1);
    fit(batch_b, mu2, c2);

    auto psd_sqrt = [](const Eigen::MatrixXd& m) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        if (es.info() != Eigen::Success)
            throw NumericError("frechet_similarity: eigendecomposition failed");
        Eigen::VectorXd ev = es.eigenvalues();
        double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < ev.size(); ++i) {
            if (ev(i) < -1e-8 * scale)
                throw NumericError("frechet_similarity: covariance not PSD after "
                                   "regularization");
            ev(i) = std::sqrt(std::max(ev(i), 0.0));
        }
        return Eigen::MatrixXd(es.eigenvectors() * ev.asDiagonal() *
                               es.eigenvectors().transpose());
    };

    Eigen::MatrixXd s1 = psd_sqrt(c1);
    Eigen::MatrixXd inner = s1 * c2 * s1;
    inner = 0.5 * (inner + inner.transpose().eval());
    Eigen::MatrixXd s_inner = psd_sqrt(inner);

    double mean_term = (mu1 - mu2).squaredNorm();
    double trace_term = c1.trace() + c2.trace() - 2.0 * s_inner.trace();
    return std::max(mean_term + trace_term, 0.0);
}

double student_t_cdf(double x, double dof) {
    if (!(dof > 0.0)) throw ParameterError("student_t_cdf: dof must be positive");
    if (x == 0.0) return 0.5;
    double ib = regularized_incomplete_beta(dof / (x * x + dof), dof / 2.0, 0.5);
    return x > 0.0 ? 1.0 - ib / 2.0 : ib / 2.0;
}

WelchResult welch_test(std::span<const double> d_s, std::span<const double> d_c) {
    if (d_s.size() < 2 || d_c.size() < 2)
        throw StatisticalError("welch_test: each sample needs >= 2 elements");
    double mu_s, v_s, mu_c, v_c;
    mean_var(d_s, mu_s, v_s);
    mean_var(d_c, mu_c, v_c);
    double ns = static_cast<double>(d_s.size());
    double nc = static_cast<double>(d_c.size());
    double se2 = v_c / nc + v_s / ns;
    if (!(se2 > 0.0))
        throw StatisticalError("welch_test: degenerate (zero) variance in both samples");
    WelchResult r;
    r.t_stat = (mu_c - mu_s) / std::sqrt(se2);
    r.dof = se2 * se2 /
            ((v_c / nc) * (v_c / nc) / (nc - 1.0) + (v_s / ns) * (v_s / ns) / (ns - 1.0));
    r.p_value = 1.0 - student_t_cdf(r.t_stat, r.dof);
    return r;
}

VerificationReport verify(std::vector<double> d_s, std::vector<double> d_c, double alpha) {
    WelchResult w = welch_test(d_s, d_c);
    VerificationReport rep;
    double ssum = 0.0, csum = 0.0;
    for (double v : d_s) ssum += v;
    for (double v : d_c) csum += v;
    rep.mu_s = ssum / static_cast<double>(d_s.size());
    rep.mu_c = csum / static_cast<double>(d_c.size());
    rep.d_s = std::move(d_s);
    rep.d_c = std::move(d_c);
    rep.t_stat = w.t_stat;
    rep.dof = w.dof;
    rep.p_value = w.p_value;
    rep.alpha = alpha;
    rep.verdict = w.p_value < alpha;
    return rep;
}

Tensor prf_trigger(std::span<const std::uint8_t> key, std::vector<std::size_t> shape,
                   double low, double high) {
    if (key.empty()) throw ParameterError("prf_trigger: key must not be empty");
    if (!(high > low)) throw ParameterError("prf_trigger: high must exceed low");
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;

    // Fold the key bytes into the 128-bit SipHash key.
    std::uint64_t k0 = 0x9E3779B97F4A7C15ULL, k1 = 0xC2B2AE3D27D4EB4FULL;
    for (std::size_t i = 0; i < key.size(); ++i) {
        if (i % 16 < 8)
            k0 = (k0 ^ (std::uint64_t(key[i]) << (8 * (i % 8)))) * 0x100000001B3ULL;
        else
            k1 = (k1 ^ (std::uint64_t(key[i]) << (8 * (i % 8)))) * 0x100000001B3ULL;
    }
    SipHash prf(k0, k1);

    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t word = prf.hash_u64(static_cast<std::uint64_t>(i));
        double u = static_cast<double>(word >> 11) * 0x1.0p-53;
        vals[i] = low + u * (high - low);
    }
    return Tensor(std::move(shape), std::move(vals));
}

Tensor prf_trigger(const std::string& key, std::vector<std::size_t> shape,
                   double low, double high) {
    return prf_trigger(
        std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(key.data()),
                                      key.size()),
        std::move(shape), low, high);
}

}  // namespace wdm
