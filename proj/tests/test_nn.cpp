#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rib/nn.hpp"
#include "rib/rng.hpp"

using namespace rib;
using nn::Activation;

namespace {

// Flatten/unflatten parameters so losses can be probed by central finite
// differences, the independent oracle for every gradient in this suite.
std::vector<double*> param_ptrs(nn::MLPParams& p) {
    std::vector<double*> ptrs;
    for (auto& layer : p.layers) {
        for (double& w : layer.weight.data) ptrs.push_back(&w);
        for (double& b : layer.bias) ptrs.push_back(&b);
    }
    return ptrs;
}

std::vector<double> grad_flat(const nn::MLPGrads& g) {
    std::vector<double> flat;
    for (std::size_t l = 0; l < g.weight.size(); ++l) {
        flat.insert(flat.end(), g.weight[l].data.begin(), g.weight[l].data.end());
        flat.insert(flat.end(), g.bias[l].begin(), g.bias[l].end());
    }
    return flat;
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max({std::abs(got), std::abs(want), 1e-8});
}

}  // namespace

TEST_CASE("activation values at hand-checked points") {
    CHECK(nn::activation_eval(Activation::Identity, -1.5) == -1.5);
    CHECK(nn::activation_eval(Activation::Relu, -2.0) == 0.0);
    CHECK(nn::activation_eval(Activation::Relu, 3.0) == 3.0);
    CHECK(nn::activation_eval(Activation::LeakyRelu, -2.0) == doctest::Approx(-0.02));
    CHECK(nn::activation_eval(Activation::Softplus, 0.0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(nn::activation_eval(Activation::Sigmoid, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
    // overflow safety
    CHECK(std::isfinite(nn::activation_eval(Activation::Softplus, 800.0)));
    CHECK(nn::activation_eval(Activation::Softplus, 800.0) == doctest::Approx(800.0));
    CHECK(nn::activation_eval(Activation::Sigmoid, -800.0) == doctest::Approx(0.0));
    CHECK(nn::softplus(-800.0) == doctest::Approx(0.0));
}

TEST_CASE("activation derivatives match finite differences") {
    Rng rng(1);
    for (Activation a : {Activation::Identity, Activation::Relu, Activation::LeakyRelu,
                         Activation::Softplus, Activation::Sigmoid}) {
        for (int i = 0; i < 100; ++i) {
            double x = rng.uniform(-4.0, 4.0);
            if ((a == Activation::Relu || a == Activation::LeakyRelu) && std::abs(x) < 1e-3) {
                x = 0.5;  // avoid the kink
            }
            const double h = 1e-6;
            const double fd =
                (nn::activation_eval(a, x + h) - nn::activation_eval(a, x - h)) / (2 * h);
            CHECK(rel_err(nn::activation_deriv(a, x), fd) < 1e-4);
        }
    }
}

TEST_CASE("forward pass of a hand-built linear layer is a plain matrix product") {
    nn::MLPParams p;
    nn::Layer layer;
    layer.weight = Matrix(2, 3);
    // W = [[1,2,3],[4,5,6]], b = (0.5, -1)
    for (int i = 0; i < 6; ++i) layer.weight.data[i] = i + 1;
    layer.bias = {0.5, -1.0};
    layer.activation = Activation::Identity;
    p.layers.push_back(layer);

    Matrix x(1, 3);
    x.data = {1.0, -1.0, 2.0};  // Wx+b = (1-2+6+0.5, 4-5+12-1) = (5.5, 10)
    const Matrix y = nn::mlp_forward(p, x);
    REQUIRE(y.rows == 1);
    REQUIRE(y.cols == 2);
    CHECK(y(0, 0) == doctest::Approx(5.5).epsilon(1e-15));
    CHECK(y(0, 1) == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("two-layer relu forward at a hand-solved point") {
    nn::MLPParams p;
    nn::Layer l1;
    l1.weight = Matrix(2, 2);
    l1.weight.data = {1.0, 0.0, 0.0, -1.0};
    l1.bias = {0.0, 0.0};
    l1.activation = Activation::Relu;
    nn::Layer l2;
    l2.weight = Matrix(1, 2);
    l2.weight.data = {1.0, 1.0};
    l2.bias = {0.25};
    l2.activation = Activation::Identity;
    p.layers = {l1, l2};

    Matrix x(1, 2);
    x.data = {2.0, 3.0};  // hidden = relu(2, -3) = (2, 0); out = 2 + 0.25
    CHECK(nn::mlp_forward(p, x)(0, 0) == doctest::Approx(2.25).epsilon(1e-15));
}

TEST_CASE("softmax cross-entropy at hand-computed logits") {
    Matrix logits(2, 2);
    logits.data = {0.0, 0.0, 2.0, 0.0};
    const nn::CrossEntropyResult r = nn::softmax_cross_entropy(logits, {0, 1});
    // row 0: -ln 1/2 = ln 2; row 1: -ln(1/(1+e^2)) = ln(1+e^2)
    const double want = (std::log(2.0) + std::log(1.0 + std::exp(2.0))) / 2.0;
    CHECK(r.loss == doctest::Approx(want).epsilon(1e-14));
    // grad = (softmax - onehot)/batch
    CHECK(r.logit_grad(0, 0) == doctest::Approx((0.5 - 1.0) / 2.0).epsilon(1e-14));
    CHECK(r.logit_grad(0, 1) == doctest::Approx(0.5 / 2.0).epsilon(1e-14));
    const double p1 = std::exp(2.0) / (1.0 + std::exp(2.0));
    CHECK(r.logit_grad(1, 0) == doctest::Approx(p1 / 2.0).epsilon(1e-13));
    CHECK(r.logit_grad(1, 1) == doctest::Approx((1.0 - p1 - 1.0) / 2.0).epsilon(1e-13));
}

TEST_CASE("cross-entropy is invariant to a constant logit shift") {
    Matrix a(1, 3), b(1, 3);
    a.data = {1.0, -2.0, 0.5};
    b.data = {1001.0, 998.0, 1000.5};
    CHECK(nn::softmax_cross_entropy(a, {2}).loss ==
          doctest::Approx(nn::softmax_cross_entropy(b, {2}).loss).epsilon(1e-12));
}

TEST_CASE("full backprop matches central finite differences on random MLPs") {
    Rng rng(77);
    int configs = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t in = 2 + trial % 3;
        const std::size_t hidden = 3 + trial % 4;
        const std::size_t out = 2 + trial % 2;
        const Activation act =
            std::vector<Activation>{Activation::LeakyRelu, Activation::Softplus,
                                    Activation::Sigmoid}[trial % 3];
        Rng init = rng.stream("init", trial);
        nn::MLPParams p = nn::init_mlp({in, hidden, out}, {act, Activation::Identity}, init);

        Matrix x(3, in);
        for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
        std::vector<int> labels(3);
        for (int& l : labels) l = static_cast<int>(rng.next_below(out));

        auto loss_fn = [&]() {
            return nn::softmax_cross_entropy(nn::mlp_forward(p, x), labels).loss;
        };

        nn::ForwardCache cache;
        const Matrix logits = nn::mlp_forward(p, x, &cache);
        const nn::CrossEntropyResult ce = nn::softmax_cross_entropy(logits, labels);
        nn::MLPGrads grads = nn::zero_grads(p);
        const Matrix input_grad = nn::mlp_backward(p, cache, ce.logit_grad, grads);

        const std::vector<double> flat = grad_flat(grads);
        std::vector<double*> ptrs = param_ptrs(p);
        REQUIRE(flat.size() == ptrs.size());
        const double h = 1e-6;
        for (std::size_t k = 0; k < ptrs.size(); ++k) {
            const double keep = *ptrs[k];
            *ptrs[k] = keep + h;
            const double up = loss_fn();
            *ptrs[k] = keep - h;
            const double down = loss_fn();
            *ptrs[k] = keep;
            CHECK(rel_err(flat[k], (up - down) / (2 * h)) < 1e-4);
        }
        // input gradient against the same oracle
        for (std::size_t k = 0; k < x.data.size(); ++k) {
            const double keep = x.data[k];
            x.data[k] = keep + h;
            const double up = loss_fn();
            x.data[k] = keep - h;
            const double down = loss_fn();
            x.data[k] = keep;
            CHECK(rel_err(input_grad.data[k], (up - down) / (2 * h)) < 1e-4);
        }
        ++configs;
    }
    CHECK(configs == 50);
}

TEST_CASE("backward throws on a stale cache") {
    Rng rng(5);
    nn::MLPParams p = nn::init_mlp({2, 2}, {Activation::Identity}, rng);
    Matrix x(1, 2);
    x.data = {1.0, 1.0};
    nn::ForwardCache cache;
    nn::mlp_forward(p, x, &cache);
    Matrix g(2, 2);  // wrong batch size
    nn::MLPGrads grads = nn::zero_grads(p);
    CHECK_THROWS_AS(nn::mlp_backward(p, cache, g, grads), std::invalid_argument);
}

TEST_CASE("adam matches an independent scalar recurrence") {
    // 1x1 identity "network": parameter w, gradient supplied directly.
    nn::MLPParams p;
    nn::Layer l;
    l.weight = Matrix(1, 1);
    l.weight.data = {0.3};
    l.bias = {0.1};
    p.layers = {l};
    nn::AdamState state = nn::init_adam(p);

    double w = 0.3, b = 0.1;
    double mw = 0, vw = 0, mb = 0, vb = 0;
    const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    Rng rng(99);
    for (int t = 1; t <= 200; ++t) {
        nn::MLPGrads g = nn::zero_grads(p);
        const double gw = rng.uniform(-1.0, 1.0);
        const double gb = rng.uniform(-1.0, 1.0);
        g.weight[0].data = {gw};
        g.bias[0] = {gb};
        nn::adam_step(state, p, g, lr);

        mw = b1 * mw + (1 - b1) * gw;
        vw = b2 * vw + (1 - b2) * gw * gw;
        mb = b1 * mb + (1 - b1) * gb;
        vb = b2 * vb + (1 - b2) * gb * gb;
        const double c1 = 1 - std::pow(b1, t), c2 = 1 - std::pow(b2, t);
        w -= lr * (mw / c1) / (std::sqrt(vw / c2) + eps);
        b -= lr * (mb / c1) / (std::sqrt(vb / c2) + eps);

        REQUIRE(p.layers[0].weight.data[0] == doctest::Approx(w).epsilon(1e-12));
        REQUIRE(p.layers[0].bias[0] == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("momentum matches an independent scalar recurrence") {
    nn::MLPParams p;
    nn::Layer l;
    l.weight = Matrix(1, 1);
    l.weight.data = {-0.2};
    l.bias = {0.0};
    p.layers = {l};
    nn::MomentumState state = nn::init_momentum(p, 0.9);

    double w = -0.2, v = 0.0;
    Rng rng(7);
    for (int t = 0; t < 100; ++t) {
        nn::MLPGrads g = nn::zero_grads(p);
        const double gw = rng.uniform(-1.0, 1.0);
        g.weight[0].data = {gw};
        nn::momentum_step(state, p, g, 0.05);
        v = 0.9 * v + gw;
        w -= 0.05 * v;
        REQUIRE(p.layers[0].weight.data[0] == doctest::Approx(w).epsilon(1e-12));
    }
}

TEST_CASE("cosine schedule at hand-checked points") {
    CHECK(nn::cosine_lr(0, 100, 0.4) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(nn::cosine_lr(50, 100, 0.4) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(nn::cosine_lr(100, 100, 0.4) == doctest::Approx(0.0).epsilon(1).scale(1e-12));
    CHECK(nn::cosine_lr(25, 100, 1.0) ==
          doctest::Approx((1.0 + std::cos(M_PI * 0.25)) / 2.0).epsilon(1e-12));
    CHECK_THROWS_AS(nn::cosine_lr(101, 100, 0.4), std::invalid_argument);
}

TEST_CASE("glorot init respects fan-based bounds and is centred") {
    Rng rng(31);
    nn::MLPParams p = nn::init_mlp({100, 80}, {Activation::Identity}, rng);
    const double limit = std::sqrt(6.0 / (100 + 80));
    double sum = 0.0;
    for (double w : p.layers[0].weight.data) {
        CHECK(std::abs(w) <= limit);
        sum += w;
    }
    CHECK(std::abs(sum / (100.0 * 80.0)) < limit / 10.0);
    for (double b : p.layers[0].bias) CHECK(b == 0.0);
}

TEST_CASE("validate rejects mismatched layer chains") {
    nn::MLPParams p;
    nn::Layer l1, l2;
    l1.weight = Matrix(3, 2);
    l1.bias = std::vector<double>(3, 0.0);
    l2.weight = Matrix(1, 4);  // expects 3 inputs
    l2.bias = {0.0};
    p.layers = {l1, l2};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
