#ifndef WDM_VERIFY_HPP
#define WDM_VERIFY_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wdm/tensor.hpp"

namespace wdm {

// Mean squared element difference; smaller = more similar.
double mse_similarity(const Tensor& a, const Tensor& a_hat);

// Frechet distance between the Gaussian fits of two flattened sample
// batches:  |mu1 - mu2|^2 + tr(C1 + C2 - 2 (C1^{1/2} C2 C1^{1/2})^{1/2}).
// Covariances are regularized with 1e-6 I before the matrix square roots.
double frechet_similarity(const std::vector<Tensor>& batch_a,
                          const std::vector<Tensor>& batch_b);

// Exact Student-t CDF via the regularized incomplete beta function.
double student_t_cdf(double x, double dof);

struct WelchResult {
    double t_stat = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
};

// One-sided Welch test of H0: mu_c <= mu_s against H1: mu_c > mu_s.
//   t = (mean(d_c) - mean(d_s)) / sqrt(v_c/n_c + v_s/n_s)
// with Welch-Satterthwaite degrees of freedom; p = 1 - T_CDF(t, dof).
// Rejecting H0 (small p) means the control scores are significantly worse
// than the suspect's, i.e. the suspect carries the watermark.
WelchResult welch_test(std::span<const double> d_s, std::span<const double> d_c);

struct VerificationReport {
    std::vector<double> d_s;  // similarity scores from the suspect model
    std::vector<double> d_c;  // similarity scores from an independent control
    double mu_s = 0.0;
    double mu_c = 0.0;
    double t_stat = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
    bool verdict = false;  // true <=> p < alpha <=> flagged as stolen
    double alpha = 1e-3;
};

VerificationReport verify(std::vector<double> d_s, std::vector<double> d_c, double alpha);

// Deterministic trigger from a secret key: a keyed PRF (SipHash-2-4) in
// counter mode maps consecutive 8-byte words to uniform reals in [low, high).
Tensor prf_trigger(std::span<const std::uint8_t> key, std::vector<std::size_t> shape,
                   double low, double high);
Tensor prf_trigger(const std::string& key, std::vector<std::size_t> shape,
                   double low, double high);

namespace detail {
// SipHash-2-4 of one 8-byte little-endian message word.
std::uint64_t siphash24(std::uint64_t k0, std::uint64_t k1, std::uint64_t msg);
}  // namespace detail

}  // namespace wdm

#endif
