#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "wdm/errors.hpp"
#include "wdm/rng.hpp"
#include "wdm/tensor.hpp"

using namespace wdm;

TEST_SUITE_BEGIN("tensor");

TEST_CASE("matmul: identity leaves any matrix unchanged") {
    Tensor id({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor m({3, 3}, {2.5, -1, 0.25, 7, 3, -4, 0.5, 9, 1e-3});
    Tensor out = matmul(id, m);
    for (std::size_t i = 0; i < 9; ++i) CHECK(out.at(i) == m.at(i));
}

TEST_CASE("matmul: zero times anything is zero") {
    Tensor z = Tensor::zeros({2, 3});
    Tensor m({3, 2}, {1, 2, 3, 4, 5, 6});
    Tensor out = matmul(z, m);
    for (std::size_t i = 0; i < 4; ++i) CHECK(out.at(i) == 0.0);
}

TEST_CASE("matmul: matches the element-by-element triple loop") {
    Rng rng(42);
    Tensor a({2, 3}, rng.normal_vec(6));
    Tensor b({3, 2}, rng.normal_vec(6));
    Tensor out = matmul(a, b);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            double want = 0.0;
            for (std::size_t p = 0; p < 3; ++p) want += a.at(i, p) * b.at(p, j);
            CHECK(std::fabs(out.at(i, j) - want) < 1e-12);
        }
}

TEST_CASE("matmul: inner dimension mismatch throws") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({2, 2});
    CHECK_THROWS_AS(matmul(a, b), DimensionError);
}

TEST_CASE("elementwise: additive and multiplicative identities") {
    Tensor a = Tensor::from_vector({1.5, -2.0, 0.0, 4.25});
    Tensor z = Tensor::zeros({4});
    Tensor one = Tensor::scalar(1.0);
    Tensor s = add(a, z);
    Tensor p = mul(a, one);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(s.at(i) == a.at(i));
        CHECK(p.at(i) == a.at(i));
    }
}

TEST_CASE("elementwise: subtraction and shape errors") {
    Tensor a = Tensor::from_vector({1, 2});
    Tensor b = Tensor::from_vector({3, 5});
    Tensor d = sub(a, b);
    CHECK(d.at(0) == -2.0);
    CHECK(d.at(1) == -3.0);
    CHECK_THROWS_AS(add(a, Tensor::zeros({3})), DimensionError);
}

TEST_CASE("mse_loss: exact values and oracle") {
    Tensor a = Tensor::from_vector({1, 2, 3});
    CHECK(mse_loss(a, a).value() == 0.0);
    CHECK(mse_loss(Tensor::from_vector({0, 0}), Tensor::from_vector({1, 1})).value() ==
          1.0);

    Rng rng(7);
    auto pv = rng.normal_vec(16);
    auto tv = rng.normal_vec(16);
    double want = 0.0;
    for (std::size_t i = 0; i < 16; ++i) want += (pv[i] - tv[i]) * (pv[i] - tv[i]);
    want /= 16.0;
    double got = mse_loss(Tensor::from_vector(pv), Tensor::from_vector(tv)).value();
    CHECK(std::fabs(got - want) < 1e-12);

    CHECK_THROWS_AS(mse_loss(a, Tensor::zeros({4})), DimensionError);
}

TEST_CASE("backward: sum gives unit gradients; constants give zeros") {
    Tensor w = Tensor::from_vector({1, 2, 3}, true);
    Tensor loss = sum(w);
    w.zero_grad();
    backward(loss);
    for (double g : w.grad()) CHECK(g == 1.0);

    // Loss not touching w leaves its (zeroed) gradient at zero.
    Tensor u = Tensor::from_vector({5, 5}, true);
    Tensor loss2 = sum(mul(u, 2.0));
    w.zero_grad();
    u.zero_grad();
    backward(loss2);
    for (double g : w.grad()) CHECK(g == 0.0);
    for (double g : u.grad()) CHECK(g == 2.0);
}

TEST_CASE("backward: contract errors") {
    Tensor w = Tensor::from_vector({1, 2}, true);
    Tensor vecloss = mul(w, 2.0);
    CHECK_THROWS_AS(backward(vecloss), ContractError);
    Tensor detached = sum(Tensor::from_vector({1, 2, 3}));
    CHECK_THROWS_AS(backward(detached), ContractError);
}

TEST_CASE("backward: repeated calls accumulate") {
    Tensor w = Tensor::from_vector({1.0}, true);
    w.zero_grad();
    backward(sum(w));
    backward(sum(w));
    CHECK(w.grad()[0] == 2.0);
}

TEST_CASE("backward: small net gradients match central differences") {
    Rng rng(123);
    auto wv = rng.normal_vec(6);
    auto xv = rng.normal_vec(3);
    auto yv = rng.normal_vec(2);
    Tensor w({3, 2}, wv, true);
    Tensor x({1, 3}, xv);
    Tensor y({1, 2}, yv);
    Tensor loss = mse_loss(matmul(x, w), y);
    w.zero_grad();
    backward(loss);
    auto grad = w.grad();

    double h = 1e-5;
    for (std::size_t i = 0; i < 6; ++i) {
        auto eval = [&](double v) {
            auto wv2 = wv;
            wv2[i] = v;
            Tensor w2({3, 2}, wv2);
            return mse_loss(matmul(x, w2), y).value();
        };
        double fd = (eval(wv[i] + h) - eval(wv[i] - h)) / (2 * h);
        double denom = std::max({std::fabs(fd), std::fabs(grad[i]), 1e-6});
        CHECK(std::fabs(fd - grad[i]) / denom < 1e-4);
    }
}

TEST_CASE("gradient soundness: random graphs vs finite differences") {
    Rng rng(2024);
    for (int rep = 0; rep < 30; ++rep) {
        auto g = testing::RandomGraph::random(rng);
        std::vector<std::vector<double>> vals;
        for (std::size_t i = 0; i < g.n_leaves; ++i) vals.push_back(rng.normal_vec(g.dim));
        CHECK(testing::gradient_vs_fd(g, vals) < 1e-4);
    }
}

TEST_CASE("backward linearity: grad(a*L1 + L2) == a*grad(L1) + grad(L2)") {
    Rng rng(99);
    auto vals = rng.normal_vec(8);
    double alpha = 2.75;

    auto make = [&]() { return Tensor::from_vector(vals, true); };
    Tensor w1 = make();
    Tensor l1 = mse_loss(silu(w1), Tensor::zeros({8}));
    w1.zero_grad();
    backward(l1);

    Tensor w2 = make();
    Tensor l2 = sum(mul(w2, w2));
    w2.zero_grad();
    backward(l2);

    Tensor w3 = make();
    Tensor combined = add(mul(mse_loss(silu(w3), Tensor::zeros({8})), alpha),
                          sum(mul(w3, w3)));
    w3.zero_grad();
    backward(combined);

    for (std::size_t i = 0; i < 8; ++i) {
        double want = alpha * w1.grad()[i] + w2.grad()[i];
        CHECK(std::fabs(w3.grad()[i] - want) < 1e-10);
    }
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
    std::vector<Tensor> params{Tensor::from_vector({1.0, -2.0}, true)};
    params[0].zero_grad();
    AdamState st = AdamState::init(params);
    adam_step(params, {"w"}, st, 0.1);
    CHECK(params[0].at(0) == 1.0);
    CHECK(params[0].at(1) == -2.0);
    CHECK(st.step == 1);
}

TEST_CASE("adam: single step matches the hand-stepped recurrence") {
    std::vector<Tensor> params{Tensor::scalar(1.0, true)};
    params[0].zero_grad();
    Tensor loss = sum(params[0]);  // gradient of 1
    backward(loss);
    AdamState st = AdamState::init(params);
    adam_step(params, {"w"}, st, 0.1);

    // Replay the recurrences by hand.
    double b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 1.0, lr = 0.1;
    double m = (1 - b1) * g;
    double v = (1 - b2) * g * g;
    double mhat = m / (1 - b1);
    double vhat = v / (1 - b2);
    double want = 1.0 - lr * mhat / (std::sqrt(vhat) + eps);
    CHECK(std::fabs(params[0].value() - want) < 1e-12);
}

TEST_CASE("adam: identical parameters with identical grads update identically") {
    std::vector<Tensor> params{Tensor::from_vector({0.5}, true),
                               Tensor::from_vector({0.5}, true)};
    for (auto& p : params) p.zero_grad();
    backward(add(sum(mul(params[0], 3.0)), sum(mul(params[1], 3.0))));
    AdamState st = AdamState::init(params);
    adam_step(params, {"a", "b"}, st, 0.01);
    CHECK(params[0].value() == params[1].value());
}

TEST_CASE("adam: non-finite gradient raises a numeric error naming the parameter") {
    std::vector<Tensor> params{Tensor::scalar(1.0, true)};
    params[0].zero_grad();
    backward(sum(params[0]));
    // Poison the gradient through a second accumulate of inf.
    Tensor inf_path = mul(params[0], std::numeric_limits<double>::infinity());
    backward(sum(inf_path));
    AdamState st = AdamState::init(params);
    try {
        adam_step(params, {"theta_3"}, st, 0.1);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("theta_3") != std::string::npos);
    }
}

TEST_CASE("determinism: identical seeds give bit-identical draws") {
    Rng a(555), b(555);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
    Rng s1 = Rng::stream(1, 0), s2 = Rng::stream(1, 1);
    bool differ = false;
    for (int i = 0; i < 10; ++i) differ |= (s1.next_u64() != s2.next_u64());
    CHECK(differ);
}

TEST_CASE("no-grad mode suppresses the tape") {
    Tensor w = Tensor::from_vector({1.0, 2.0}, true);
    NoGradGuard ng;
    Tensor out = mul(w, 3.0);
    CHECK_FALSE(out.requires_grad());
}

TEST_SUITE_END();
