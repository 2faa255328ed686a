#include "rib/train.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "rib/eval.hpp"

namespace rib::train {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* bytes, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a_u64(std::uint64_t h, std::uint64_t v) { return fnv1a(h, &v, sizeof v); }

std::uint64_t fnv1a_double(std::uint64_t h, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    return fnv1a_u64(h, bits);
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& order, std::size_t begin,
                   std::size_t count, std::size_t modulo) {
    Matrix out(count, src.cols);
    for (std::size_t r = 0; r < count; ++r) {
        const std::size_t idx = order[(begin + r) % modulo];
        for (std::size_t c = 0; c < src.cols; ++c) out(r, c) = src(idx, c);
    }
    return out;
}

}  // namespace

const char* to_string(Objective o) {
    switch (o) {
        case Objective::CE: return "ce";
        case Objective::CeL2: return "ce+l2";
        case Objective::RIB: return "rib";
        case Objective::RibAdv: return "rib-adv";
    }
    return "?";
}

Objective objective_from_string(const std::string& name) {
    if (name == "ce") return Objective::CE;
    if (name == "ce+l2") return Objective::CeL2;
    if (name == "rib") return Objective::RIB;
    if (name == "rib-adv") return Objective::RibAdv;
    throw std::invalid_argument("unknown objective: " + name);
}

void TrainConfig::validate() const {
    if (beta < 0.0) throw std::invalid_argument("TrainConfig: beta must be >= 0");
    if (batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (base_lr <= 0.0) throw std::invalid_argument("TrainConfig: base_lr must be positive");
    if (encoder.repr_dim < 1) throw std::invalid_argument("TrainConfig: repr_dim must be >= 1");
    if (critic_steps_per_encoder_step < 1) {
        throw std::invalid_argument("TrainConfig: critic_steps_per_encoder_step must be >= 1");
    }
}

std::uint64_t TrainConfig::digest() const {
    std::uint64_t h = kFnvOffset;
    for (std::size_t w : encoder.hidden) h = fnv1a_u64(h, w);
    h = fnv1a_u64(h, encoder.repr_dim);
    h = fnv1a_u64(h, static_cast<std::uint64_t>(encoder.hidden_activation));
    h = fnv1a_u64(h, static_cast<std::uint64_t>(encoder.output_activation));
    for (std::size_t w : critic_hidden) h = fnv1a_u64(h, w);
    h = fnv1a_u64(h, static_cast<std::uint64_t>(objective));
    h = fnv1a_double(h, beta);
    h = fnv1a_u64(h, static_cast<std::uint64_t>(bregman_kind));
    h = fnv1a_u64(h, epochs);
    h = fnv1a_u64(h, batch_size);
    h = fnv1a_double(h, base_lr);
    h = fnv1a_double(h, weight_decay);
    h = fnv1a_u64(h, critic_steps_per_encoder_step);
    h = fnv1a_u64(h, seed);
    h = fnv1a_u64(h, static_cast<std::uint64_t>(standardize));
    h = fnv1a_u64(h, eval_recognizability_every);
    h = fnv1a_u64(h, recognizability_pairs);
    return h;
}

std::uint64_t params_digest(const nn::MLPParams& params) {
    std::uint64_t h = kFnvOffset;
    for (const nn::Layer& l : params.layers) {
        for (double v : l.weight.data) h = fnv1a_double(h, v);
        for (double v : l.bias) h = fnv1a_double(h, v);
    }
    return h;
}

std::pair<double, double> evaluate(const nn::MLPParams& encoder, const nn::MLPParams& head,
                                   const data::LabeledDataset& ds) {
    const Matrix repr = nn::mlp_forward(encoder, ds.features);
    const Matrix logits = nn::mlp_forward(head, repr);
    const nn::CrossEntropyResult ce = nn::softmax_cross_entropy(logits, ds.labels);
    std::size_t wrong = 0;
    for (std::size_t r = 0; r < logits.rows; ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols; ++c) {
            if (logits(r, c) > logits(r, best)) best = c;
        }
        if (static_cast<int>(best) != ds.labels[r]) ++wrong;
    }
    return {static_cast<double>(wrong) / static_cast<double>(ds.size()), ce.loss};
}

Matrix encode(const TrainResult& result, const Matrix& features) {
    return nn::mlp_forward(result.encoder, data::apply_standardizer(result.standardizer, features));
}

std::vector<int> predict(const TrainResult& result, const Matrix& features) {
    const Matrix logits = nn::mlp_forward(result.head, encode(result, features));
    std::vector<int> out(logits.rows);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols; ++c) {
            if (logits(r, c) > logits(r, best)) best = c;
        }
        out[r] = static_cast<int>(best);
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>> recognizability_scores(
    const nn::MLPParams& encoder, const nn::MLPParams& critic_net,
    const data::Standardizer& standardizer, const Matrix& train_features,
    const Matrix& ghost_features, std::size_t max_pairs, std::uint64_t seed) {
    if (train_features.rows == 0 || ghost_features.rows == 0 || max_pairs == 0) {
        throw std::invalid_argument("recognizability_scores: no pairs available");
    }
    const std::size_t m = max_pairs;
    Rng rng = Rng(seed).stream("recog-eval");
    // shuffled index cycles: every point participates before any repeats,
    // and small sets can still fill a large evaluation batch
    const std::vector<std::size_t> train_perm = rng.permutation(train_features.rows);
    const std::vector<std::size_t> ghost_perm = rng.permutation(ghost_features.rows);
    std::vector<std::size_t> train_idx(m), ghost_idx(m);
    for (std::size_t i = 0; i < m; ++i) {
        train_idx[i] = train_perm[i % train_perm.size()];
        ghost_idx[i] = ghost_perm[i % ghost_perm.size()];
    }

    Matrix t_train = nn::mlp_forward(
        encoder, data::apply_standardizer(
                     standardizer, gather_rows(train_features, train_idx, 0, m, m)));
    Matrix t_ghost = nn::mlp_forward(
        encoder, data::apply_standardizer(
                     standardizer, gather_rows(ghost_features, ghost_idx, 0, m, m)));

    data::SelectorMask u;
    u.bits.resize(m);
    for (std::size_t i = 0; i < m; ++i) u.bits[i] = rng.fair_bit() ? 1 : 0;

    const critic::PairBatch pairs = critic::arrange_pairs(t_train, t_ghost, u);
    // H1 = conditional (canonical) arrangement, H0 = selector-randomized;
    // ranking on raw V scores is monotone-equivalent to the sigmoid form.
    return {critic::critic_score(critic_net, pairs.joint),
            critic::critic_score(critic_net, pairs.marginal)};
}

double recognizability_probe(const nn::MLPParams& encoder,
                             const data::Standardizer& standardizer,
                             const Matrix& train_features, const Matrix& ghost_features,
                             const ProbeConfig& probe, std::uint64_t seed) {
    if (train_features.rows < 4 || ghost_features.rows < 4) {
        throw std::invalid_argument("recognizability_probe: need at least 4 rows per side");
    }
    const Rng master = Rng(seed).stream("recog-probe");
    const Matrix t_all =
        nn::mlp_forward(encoder, data::apply_standardizer(standardizer, train_features));
    const Matrix g_all =
        nn::mlp_forward(encoder, data::apply_standardizer(standardizer, ghost_features));

    Rng split_rng = master.stream("split");
    const std::vector<std::size_t> t_perm = split_rng.permutation(t_all.rows);
    const std::vector<std::size_t> g_perm = split_rng.permutation(g_all.rows);
    std::vector<std::size_t> t_fit = t_perm, t_eval = t_perm;
    std::vector<std::size_t> g_fit = g_perm, g_eval = g_perm;
    if (probe.held_out) {
        const std::size_t t_half = t_all.rows / 2;
        const std::size_t g_half = g_all.rows / 2;
        t_fit.assign(t_perm.begin(), t_perm.begin() + t_half);
        t_eval.assign(t_perm.begin() + t_half, t_perm.end());
        g_fit.assign(g_perm.begin(), g_perm.begin() + g_half);
        g_eval.assign(g_perm.begin() + g_half, g_perm.end());
    }

    Rng init_rng = master.stream("init");
    nn::MLPParams net = critic::init_critic(t_all.cols, probe.hidden, init_rng);
    nn::AdamState adam = nn::init_adam(net);
    Rng batch_rng = master.stream("batch");
    Rng sel_rng = master.stream("selector");

    for (std::size_t step = 0; step < probe.steps; ++step) {
        const std::size_t bsize = probe.batch_size;
        std::vector<std::size_t> tb(bsize), gb(bsize);
        for (std::size_t i = 0; i < bsize; ++i) {
            tb[i] = t_fit[batch_rng.next_below(t_fit.size())];
            gb[i] = g_fit[batch_rng.next_below(g_fit.size())];
        }
        const Matrix t_batch = gather_rows(t_all, tb, 0, bsize, bsize);
        const Matrix g_batch = gather_rows(g_all, gb, 0, bsize, bsize);
        data::SelectorMask u;
        u.bits.resize(bsize);
        for (std::size_t i = 0; i < bsize; ++i) u.bits[i] = sel_rng.fair_bit() ? 1 : 0;

        const critic::PairBatch pairs = critic::arrange_pairs(t_batch, g_batch, u);
        nn::ForwardCache jc, mc;
        const Matrix js = nn::mlp_forward(net, pairs.joint, &jc);
        const Matrix ms = nn::mlp_forward(net, pairs.marginal, &mc);
        const critic::JsdLoss jsd = critic::jsd_critic_loss(js.data, ms.data);
        if (!std::isfinite(jsd.loss)) throw DivergenceError(step);
        nn::MLPGrads grads = nn::zero_grads(net);
        Matrix jg(bsize, 1), mg(bsize, 1);
        jg.data = jsd.joint_grad;
        mg.data = jsd.marginal_grad;
        nn::mlp_backward(net, jc, jg, grads);
        nn::mlp_backward(net, mc, mg, grads);
        nn::adam_step(adam, net, grads, probe.lr);
    }

    // score held-out pairs, cycling the eval halves as needed
    const std::size_t m = probe.eval_pairs;
    std::vector<std::size_t> ti(m), gi(m);
    for (std::size_t i = 0; i < m; ++i) {
        ti[i] = t_eval[i % t_eval.size()];
        gi[i] = g_eval[i % g_eval.size()];
    }
    const Matrix t_m = gather_rows(t_all, ti, 0, m, m);
    const Matrix g_m = gather_rows(g_all, gi, 0, m, m);
    Rng eval_rng = master.stream("eval-selector");
    data::SelectorMask u;
    u.bits.resize(m);
    for (std::size_t i = 0; i < m; ++i) u.bits[i] = eval_rng.fair_bit() ? 1 : 0;
    const critic::PairBatch pairs = critic::arrange_pairs(t_m, g_m, u);
    return eval::recognizability(critic::critic_score(net, pairs.joint),
                                 critic::critic_score(net, pairs.marginal));
}

double measure_recognizability(const nn::MLPParams& encoder, const nn::MLPParams& critic_net,
                               const data::Standardizer& standardizer, const Matrix& train_features,
                               const Matrix& ghost_features, std::size_t max_pairs,
                               std::uint64_t seed) {
    const auto [pos, neg] = recognizability_scores(encoder, critic_net, standardizer,
                                                   train_features, ghost_features, max_pairs, seed);
    return eval::recognizability(pos, neg);
}

namespace {

struct Trainer {
    const TrainConfig& cfg;
    const data::LabeledDataset& train_set;
    const data::GhostSet* ghost;
    const data::LabeledDataset* test_set;

    TrainResult run() {
        cfg.validate();
        const auto t_start = std::chrono::steady_clock::now();
        const bool with_critic =
            cfg.objective == Objective::RIB || cfg.objective == Objective::RibAdv;
        if (with_critic) {
            if (!ghost || ghost->size() == 0) {
                throw std::invalid_argument("train: RIB objectives require a ghost set");
            }
            if (ghost->dim() != train_set.dim()) {
                throw std::invalid_argument("train: ghost feature width " +
                                            std::to_string(ghost->dim()) +
                                            " != training width " +
                                            std::to_string(train_set.dim()));
            }
        }
        const double weight_decay =
            cfg.objective == Objective::CeL2 && cfg.weight_decay == 0.0 ? 1e-4
                                                                        : cfg.weight_decay;

        TrainResult result;
        if (cfg.standardize) {
            result.standardizer = data::fit_standardizer(train_set.features);
        } else {
            result.standardizer.mean.assign(train_set.dim(), 0.0);
            result.standardizer.inv_std.assign(train_set.dim(), 1.0);
        }

        data::LabeledDataset train_std = train_set;
        train_std.features = data::apply_standardizer(result.standardizer, train_set.features);
        data::LabeledDataset test_std;
        if (test_set) {
            test_std = *test_set;
            test_std.features = data::apply_standardizer(result.standardizer, test_set->features);
        }
        Matrix ghost_std;
        if (with_critic) {
            ghost_std = data::apply_standardizer(result.standardizer, ghost->features);
        }

        const Rng master(cfg.seed);
        Rng enc_rng = master.stream("encoder-init");
        Rng head_rng = master.stream("head-init");

        std::vector<std::size_t> enc_widths;
        enc_widths.push_back(train_set.dim());
        for (std::size_t h : cfg.encoder.hidden) enc_widths.push_back(h);
        enc_widths.push_back(cfg.encoder.repr_dim);
        std::vector<nn::Activation> enc_acts(cfg.encoder.hidden.size(),
                                             cfg.encoder.hidden_activation);
        enc_acts.push_back(cfg.encoder.output_activation);
        result.encoder = nn::init_mlp(enc_widths, enc_acts, enc_rng);
        result.head = nn::init_mlp(
            {cfg.encoder.repr_dim, static_cast<std::size_t>(train_set.num_classes)},
            {nn::Activation::Identity}, head_rng);

        nn::AdamState enc_adam = nn::init_adam(result.encoder);
        nn::AdamState head_adam = nn::init_adam(result.head);

        nn::MomentumState critic_momentum;
        if (with_critic) {
            Rng critic_rng = master.stream("critic-init");
            result.critic = critic::init_critic(cfg.encoder.repr_dim, cfg.critic_hidden,
                                                critic_rng);
            critic_momentum = nn::init_momentum(result.critic);
        }

        Rng shuffle_rng = master.stream("batch-shuffle");
        Rng ghost_rng = master.stream("ghost-shuffle");
        Rng selector_rng = master.stream("selector");

        result.record.config_digest = cfg.digest();
        result.record.seed = cfg.seed;

        const std::size_t n = train_set.size();
        const std::size_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
        std::size_t ghost_cursor = 0;
        std::vector<std::size_t> ghost_order;
        if (with_critic) ghost_order = ghost_rng.permutation(ghost->size());

        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            const double lr = nn::cosine_lr(epoch, cfg.epochs, cfg.base_lr);
            const std::vector<std::size_t> order = shuffle_rng.permutation(n);
            double critic_loss_sum = 0.0;
            double bregman_sum = 0.0;
            std::size_t reg_batches = 0;

            for (std::size_t step = 0; step < steps_per_epoch; ++step) {
                const std::size_t begin = step * cfg.batch_size;
                const std::size_t bsize = std::min(cfg.batch_size, n - begin);

                Matrix batch = gather_rows(train_std.features, order, begin, bsize, n);
                std::vector<int> labels(bsize);
                for (std::size_t r = 0; r < bsize; ++r) {
                    labels[r] = train_std.labels[order[begin + r]];
                }

                nn::ForwardCache enc_cache;
                const Matrix repr = nn::mlp_forward(result.encoder, batch, &enc_cache);
                nn::ForwardCache head_cache;
                const Matrix logits = nn::mlp_forward(result.head, repr, &head_cache);
                const nn::CrossEntropyResult ce = nn::softmax_cross_entropy(logits, labels);
                if (!std::isfinite(ce.loss)) throw DivergenceError(epoch);

                nn::MLPGrads head_grads = nn::zero_grads(result.head);
                Matrix repr_grad =
                    nn::mlp_backward(result.head, head_cache, ce.logit_grad, head_grads);

                Matrix ghost_batch;
                nn::ForwardCache ghost_cache;
                Matrix ghost_repr;
                data::SelectorMask u;
                if (with_critic) {
                    // ghost batches cycle independently of the training epoch
                    ghost_batch = gather_rows(ghost_std, ghost_order, ghost_cursor, bsize,
                                              ghost->size());
                    ghost_cursor = (ghost_cursor + bsize) % ghost->size();
                    ghost_repr = nn::mlp_forward(result.encoder, ghost_batch, &ghost_cache);
                    u.bits.resize(bsize);
                    for (std::size_t i = 0; i < bsize; ++i) {
                        u.bits[i] = selector_rng.fair_bit() ? 1 : 0;
                    }

                    // critic step(s) first: ascend the JSD lower bound in phi
                    for (std::size_t cs = 0; cs < cfg.critic_steps_per_encoder_step; ++cs) {
                        const critic::PairBatch pairs =
                            critic::arrange_pairs(repr, ghost_repr, u);
                        nn::ForwardCache jc, mc;
                        const Matrix js = nn::mlp_forward(result.critic, pairs.joint, &jc);
                        const Matrix ms = nn::mlp_forward(result.critic, pairs.marginal, &mc);
                        const critic::JsdLoss jsd = critic::jsd_critic_loss(js.data, ms.data);
                        if (!std::isfinite(jsd.loss)) throw DivergenceError(epoch);
                        critic_loss_sum += jsd.loss;
                        nn::MLPGrads critic_grads = nn::zero_grads(result.critic);
                        Matrix jg(bsize, 1), mg(bsize, 1);
                        jg.data = jsd.joint_grad;
                        mg.data = jsd.marginal_grad;
                        nn::mlp_backward(result.critic, jc, jg, critic_grads);
                        nn::mlp_backward(result.critic, mc, mg, critic_grads);
                        nn::momentum_step(critic_momentum, result.critic, critic_grads, lr);
                    }
                }

                Matrix ghost_repr_grad;
                if (with_critic && cfg.beta > 0.0) {
                    if (cfg.objective == Objective::RIB) {
                        const critic::PairBatch pairs =
                            critic::arrange_pairs(repr, ghost_repr, u);
                        const critic::RegularizerGrad reg = critic::regularizer_grad_to_encoder(
                            result.critic, pairs.joint, cfg.bregman_kind);
                        if (!std::isfinite(reg.mean_value)) throw DivergenceError(epoch);
                        bregman_sum += reg.mean_value;
                        ++reg_batches;
                        for (std::size_t i = 0; i < repr_grad.size(); ++i) {
                            repr_grad.data[i] += cfg.beta * reg.train_grad.data[i];
                        }
                        ghost_repr_grad = reg.ghost_grad;
                        for (double& g : ghost_repr_grad.data) g *= cfg.beta;
                    } else {  // RibAdv: descend the JSD objective through theta
                        const critic::PairBatch pairs =
                            critic::arrange_pairs(repr, ghost_repr, u);
                        nn::ForwardCache jc, mc;
                        const Matrix js = nn::mlp_forward(result.critic, pairs.joint, &jc);
                        const Matrix ms = nn::mlp_forward(result.critic, pairs.marginal, &mc);
                        // J = mean(-sp(-Vj)) - mean(sp(Vm)); encoder minimizes J
                        Matrix jg(bsize, 1), mg(bsize, 1);
                        double jsd_value = 0.0;
                        for (std::size_t i = 0; i < bsize; ++i) {
                            jsd_value -= nn::softplus(-js(i, 0)) / static_cast<double>(bsize);
                            jsd_value -= nn::softplus(ms(i, 0)) / static_cast<double>(bsize);
                            jg(i, 0) = nn::sigmoid(-js(i, 0)) / static_cast<double>(bsize);
                            mg(i, 0) = -nn::sigmoid(ms(i, 0)) / static_cast<double>(bsize);
                        }
                        if (!std::isfinite(jsd_value)) throw DivergenceError(epoch);
                        bregman_sum += jsd_value;
                        ++reg_batches;
                        nn::MLPGrads frozen = nn::zero_grads(result.critic);
                        const Matrix joint_in =
                            nn::mlp_backward(result.critic, jc, jg, frozen);
                        const Matrix marginal_in =
                            nn::mlp_backward(result.critic, mc, mg, frozen);
                        ghost_repr_grad = Matrix(bsize, repr.cols);
                        const std::size_t dim = repr.cols;
                        for (std::size_t i = 0; i < bsize; ++i) {
                            for (std::size_t c = 0; c < dim; ++c) {
                                // joint rows are always (train, ghost)
                                double tg = joint_in(i, c);
                                double gg = joint_in(i, dim + c);
                                // marginal rows are half-swapped where u=1
                                if (u.bits[i]) {
                                    tg += marginal_in(i, dim + c);
                                    gg += marginal_in(i, c);
                                } else {
                                    tg += marginal_in(i, c);
                                    gg += marginal_in(i, dim + c);
                                }
                                repr_grad(i, c) += cfg.beta * tg;
                                ghost_repr_grad(i, c) = cfg.beta * gg;
                            }
                        }
                    }
                }

                nn::MLPGrads enc_grads = nn::zero_grads(result.encoder);
                nn::mlp_backward(result.encoder, enc_cache, repr_grad, enc_grads);
                if (ghost_repr_grad.size() > 0) {
                    nn::mlp_backward(result.encoder, ghost_cache, ghost_repr_grad, enc_grads);
                }

                if (weight_decay > 0.0) {
                    for (std::size_t l = 0; l < result.encoder.layers.size(); ++l) {
                        for (std::size_t i = 0; i < enc_grads.weight[l].size(); ++i) {
                            enc_grads.weight[l].data[i] +=
                                weight_decay * result.encoder.layers[l].weight.data[i];
                        }
                        for (std::size_t i = 0; i < enc_grads.bias[l].size(); ++i) {
                            enc_grads.bias[l][i] +=
                                weight_decay * result.encoder.layers[l].bias[i];
                        }
                    }
                    for (std::size_t l = 0; l < result.head.layers.size(); ++l) {
                        for (std::size_t i = 0; i < head_grads.weight[l].size(); ++i) {
                            head_grads.weight[l].data[i] +=
                                weight_decay * result.head.layers[l].weight.data[i];
                        }
                        for (std::size_t i = 0; i < head_grads.bias[l].size(); ++i) {
                            head_grads.bias[l][i] +=
                                weight_decay * result.head.layers[l].bias[i];
                        }
                    }
                }

                nn::adam_step(enc_adam, result.encoder, enc_grads, lr);
                nn::adam_step(head_adam, result.head, head_grads, lr);
            }

            EpochMetrics m;
            m.epoch = epoch;
            m.lr = lr;
            const auto [train_err, emp_risk] = evaluate(result.encoder, result.head, train_std);
            m.train_err = train_err;
            m.emp_risk = emp_risk;
            if (test_set) {
                const auto [test_err, _] = evaluate(result.encoder, result.head, test_std);
                m.test_err = test_err;
            }
            // critic columns log the contribution to the encoder objective:
            // zero whenever the critic cannot influence theta
            const bool critic_active = with_critic && cfg.beta > 0.0;
            m.critic_loss = critic_active
                                ? critic_loss_sum / static_cast<double>(
                                                        steps_per_epoch *
                                                        cfg.critic_steps_per_encoder_step)
                                : 0.0;
            m.mean_bregman =
                critic_active && reg_batches > 0
                    ? bregman_sum / static_cast<double>(reg_batches)
                    : 0.0;
            result.record.epochs.push_back(m);

            if (with_critic && cfg.eval_recognizability_every > 0 &&
                ((epoch + 1) % cfg.eval_recognizability_every == 0 ||
                 epoch + 1 == cfg.epochs)) {
                const double r = measure_recognizability(
                    result.encoder, result.critic, result.standardizer, train_set.features,
                    ghost->features, cfg.recognizability_pairs, cfg.seed ^ (epoch + 1));
                result.record.recognizability_dynamics.emplace_back(epoch + 1, r);
            }
        }

        result.record.encoder_digest = params_digest(result.encoder);
        result.record.final_train_err = result.record.epochs.back().train_err;
        result.record.final_test_err = result.record.epochs.back().test_err;
        result.record.final_gap =
            result.record.final_test_err - result.record.final_train_err;
        if (with_critic) {
            result.record.final_recognizability = measure_recognizability(
                result.encoder, result.critic, result.standardizer, train_set.features,
                ghost->features, cfg.recognizability_pairs, cfg.seed);
        }
        result.record.wall_time_sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        return result;
    }
};

}  // namespace

TrainResult train_rib(const TrainConfig& config, const data::LabeledDataset& train_set,
                      const data::GhostSet& ghost, const data::LabeledDataset* test_set) {
    TrainConfig cfg = config;
    cfg.objective = Objective::RIB;
    return Trainer{cfg, train_set, &ghost, test_set}.run();
}

TrainResult train_ce(const TrainConfig& config, const data::LabeledDataset& train_set,
                     const data::LabeledDataset* test_set) {
    TrainConfig cfg = config;
    if (cfg.objective != Objective::CeL2) cfg.objective = Objective::CE;
    cfg.beta = 0.0;
    return Trainer{cfg, train_set, nullptr, test_set}.run();
}

TrainResult train_rib_adv(const TrainConfig& config, const data::LabeledDataset& train_set,
                          const data::GhostSet& ghost, const data::LabeledDataset* test_set) {
    TrainConfig cfg = config;
    cfg.objective = Objective::RibAdv;
    return Trainer{cfg, train_set, &ghost, test_set}.run();
}

}  // namespace rib::train
