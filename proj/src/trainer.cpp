// Copyright (C) 2026 the synthrank authors
// SPDX-License-Identifier: Apache-2.0

#include "synthrank/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "synthrank/errors.hpp"
#include "synthrank/jsonl.hpp"
#include "synthrank/util.hpp"

namespace synthrank {

double lce_loss(std::span<const GroupScores> groups) {
    if (groups.empty()) {
        throw ArgumentError("lce_loss: batch must contain at least one group");
    }
    double total = 0.0;
    for (const auto& g : groups) {
        if (g.negative_scores.empty()) {
            throw ArgumentError("lce_loss: every group needs at least one negative");
        }
        double mx = g.positive_score;
        for (double s : g.negative_scores) {
            mx = std::max(mx, s);
        }
        double denom = std::exp(g.positive_score - mx);
        for (double s : g.negative_scores) {
            denom += std::exp(s - mx);
        }
        total += mx + std::log(denom) - g.positive_score;
    }
    return total / static_cast<double>(groups.size());
}

TrainingGroup build_group(const TrainingTriplet& triplet, std::size_t m, const Corpus& corpus) {
    if (m == 0) {
        throw ArgumentError("build_group: m must be >= 1");
    }
    if (triplet.negative_doc_ids.size() < m) {
        throw ArgumentError("build_group: triplet for query " + triplet.query.query_id + " has " +
                            std::to_string(triplet.negative_doc_ids.size()) + " negatives, need " +
                            std::to_string(m));
    }
    const auto resolve = [&](const std::string& doc_id) -> const std::string& {
        const Document* doc = corpus.find(doc_id);
        if (doc == nullptr) {
            throw StateError("build_group: doc " + doc_id + " not found in corpus");
        }
        return doc->text;
    };
    TrainingGroup group;
    group.query_id = triplet.query.query_id;
    group.query_text = triplet.query.text;
    group.positive = {triplet.positive_doc_id, resolve(triplet.positive_doc_id)};
    group.negatives.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::string& id = triplet.negative_doc_ids[i];
        group.negatives.emplace_back(id, resolve(id));
    }
    return group;
}

void AdamState::ensure_size(std::size_t n) {
    if (m.size() != n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
        step = 0;
    }
}

namespace {

struct GradientBuffers {
    std::vector<double> encoder;
    std::vector<double> head;

    void reset(std::size_t encoder_size, std::size_t head_size) {
        encoder.assign(encoder_size, 0.0);
        head.assign(head_size, 0.0);
    }
};

/// Adds the gradient of the mean group loss (scaled by 1/denominator groups)
/// for every group in `groups`; returns the summed per-group losses.
double accumulate_batch_gradient(const CrossEncoderModel& model,
                                 std::span<const TrainingGroup> groups, double denominator,
                                 GradientBuffers& grads) {
    const std::size_t d = model.d_model();
    const std::span<const double> head = model.head();
    double loss_sum = 0.0;

    for (const auto& group : groups) {
        const std::size_t n = group.negatives.size() + 1;
        std::vector<std::vector<double>> cls(n);
        std::vector<double> scores(n);
        cls[0] = model.encoder().encode(group.query_text, group.positive.second);
        for (std::size_t i = 0; i < group.negatives.size(); ++i) {
            cls[i + 1] = model.encoder().encode(group.query_text, group.negatives[i].second);
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                s += cls[i][k] * head[k];
            }
            scores[i] = s;
        }

        double mx = scores[0];
        for (double s : scores) {
            mx = std::max(mx, s);
        }
        double denom = 0.0;
        for (double s : scores) {
            denom += std::exp(s - mx);
        }
        loss_sum += mx + std::log(denom) - scores[0];

        for (std::size_t i = 0; i < n; ++i) {
            const double p = std::exp(scores[i] - mx) / denom;
            const double dscore = (p - (i == 0 ? 1.0 : 0.0)) / denominator;
            for (std::size_t k = 0; k < d; ++k) {
                grads.head[k] += dscore * cls[i][k];
            }
            if (!grads.encoder.empty()) {
                std::vector<double> upstream(d);
                for (std::size_t k = 0; k < d; ++k) {
                    upstream[k] = dscore * head[k];
                }
                const std::string& doc_text =
                    i == 0 ? group.positive.second : group.negatives[i - 1].second;
                model.encoder().accumulate_param_grad(group.query_text, doc_text, upstream,
                                                      grads.encoder);
            }
        }
    }
    return loss_sum;
}

void check_finite(double loss, const GradientBuffers& grads, const std::string& context) {
    if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss while training (" + context + ")");
    }
    for (double g : grads.encoder) {
        if (!std::isfinite(g)) {
            throw TrainingError("non-finite encoder gradient while training (" + context + ")");
        }
    }
    for (double g : grads.head) {
        if (!std::isfinite(g)) {
            throw TrainingError("non-finite head gradient while training (" + context + ")");
        }
    }
}

void adam_update(CrossEncoderModel& model, const GradientBuffers& grads, AdamState& opt,
                 double learning_rate) {
    std::span<double> enc = model.encoder().params();
    std::span<double> head = model.head();
    const std::size_t total = enc.size() + head.size();
    opt.ensure_size(total);
    ++opt.step;
    const double bias1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bias2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    for (std::size_t i = 0; i < total; ++i) {
        const double g = i < enc.size() ? grads.encoder[i] : grads.head[i - enc.size()];
        opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * g;
        opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * g * g;
        const double update =
            learning_rate * (opt.m[i] / bias1) / (std::sqrt(opt.v[i] / bias2) + opt.eps);
        if (i < enc.size()) {
            enc[i] -= update;
        } else {
            head[i - enc.size()] -= update;
        }
    }
}

void validate_batch(const TrainingBatch& batch) {
    if (batch.groups.empty()) {
        throw ArgumentError("training batch must be non-empty");
    }
    const std::size_t m = batch.groups.front().negatives.size();
    for (const auto& g : batch.groups) {
        if (g.negatives.empty()) {
            throw ArgumentError("group for query " + g.query_id + " has no negatives");
        }
        if (g.negatives.size() != m) {
            throw ArgumentError("all groups in a batch must share the same m");
        }
    }
}

}  // namespace

LceGradients lce_gradients(const CrossEncoderModel& model, const TrainingBatch& batch) {
    validate_batch(batch);
    GradientBuffers grads;
    grads.reset(model.encoder().params().size(), model.head().size());
    const double loss_sum = accumulate_batch_gradient(
        model, batch.groups, static_cast<double>(batch.groups.size()), grads);
    LceGradients out;
    out.loss = loss_sum / static_cast<double>(batch.groups.size());
    out.encoder = std::move(grads.encoder);
    out.head = std::move(grads.head);
    return out;
}

double train_step(CrossEncoderModel& model, const TrainingBatch& batch, AdamState& opt,
                  const TrainHyperparams& hp) {
    LceGradients g = lce_gradients(model, batch);
    GradientBuffers grads;
    grads.encoder = std::move(g.encoder);
    grads.head = std::move(g.head);
    check_finite(g.loss, grads, "batch of " + std::to_string(batch.groups.size()) + " groups");
    adam_update(model, grads, opt, hp.learning_rate);
    return g.loss;
}

TrainingHistory train(CrossEncoderModel& model, std::span<const TrainingTriplet> triplets,
                      const Corpus& corpus, const TrainConfig& config, AdamState* opt_state) {
    if (triplets.empty()) {
        throw ArgumentError("train: dataset must be non-empty");
    }
    if (config.batch_size == 0 || config.grad_accum_steps == 0) {
        throw ArgumentError("train: batch_size and grad_accum_steps must be >= 1");
    }
    std::vector<TrainingGroup> groups;
    groups.reserve(triplets.size());
    for (const auto& triplet : triplets) {
        groups.push_back(build_group(triplet, config.m, corpus));
    }

    AdamState local_opt;
    AdamState& opt = opt_state != nullptr ? *opt_state : local_opt;
    opt.ensure_size(model.num_params());

    TrainingHistory history;
    std::vector<std::size_t> order(groups.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    const std::size_t window = config.batch_size * config.grad_accum_steps;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::mt19937_64 rng(
            util::derive_seed(config.rng_seed, "train-epoch-" + std::to_string(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[util::uniform_below(rng, i)]);
        }

        double epoch_loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += window) {
            const std::size_t count = std::min(window, order.size() - start);
            std::vector<TrainingGroup> effective;
            effective.reserve(count);
            for (std::size_t i = 0; i < count; ++i) {
                effective.push_back(groups[order[start + i]]);
            }
            GradientBuffers grads;
            grads.reset(model.encoder().params().size(), model.head().size());
            // Micro-batches only bound how many groups are scored per pass;
            // parameters stay fixed until the whole window is accumulated.
            double window_loss_sum = 0.0;
            for (std::size_t micro = 0; micro < count; micro += config.batch_size) {
                const std::size_t micro_count = std::min(config.batch_size, count - micro);
                window_loss_sum += accumulate_batch_gradient(
                    model,
                    std::span<const TrainingGroup>(effective.data() + micro, micro_count),
                    static_cast<double>(count), grads);
            }
            check_finite(window_loss_sum, grads, "epoch " + std::to_string(epoch));
            adam_update(model, grads, opt, config.learning_rate);
            epoch_loss_sum += window_loss_sum;
        }

        EpochRecord record;
        record.epoch = epoch;
        record.mean_loss = epoch_loss_sum / static_cast<double>(groups.size());
        if (config.eval_hook) {
            record.eval_reports = config.eval_hook(epoch, model);
        }
        history.epochs.push_back(std::move(record));
    }
    return history;
}

void write_history_jsonl(const TrainingHistory& history, const std::filesystem::path& path) {
    std::vector<nlohmann::json> rows;
    rows.reserve(history.epochs.size());
    for (const auto& record : history.epochs) {
        nlohmann::json evals = nlohmann::json::array();
        for (const auto& report : record.eval_reports) {
            evals.push_back(metric_report_to_json(report));
        }
        rows.push_back({{"epoch", record.epoch},
                        {"mean_loss", record.mean_loss},
                        {"eval", std::move(evals)}});
    }
    jsonl::write(path, rows);
}

TrainingHistory read_history_jsonl(const std::filesystem::path& path) {
    TrainingHistory history;
    jsonl::for_each(path, [&](const nlohmann::json& row, std::size_t) {
        EpochRecord record;
        record.epoch = row.at("epoch").get<std::size_t>();
        record.mean_loss = row.at("mean_loss").get<double>();
        for (const auto& report : row.value("eval", nlohmann::json::array())) {
            record.eval_reports.push_back(metric_report_from_json(report));
        }
        history.epochs.push_back(std::move(record));
    });
    return history;
}

void save_checkpoint(const CrossEncoderModel& model, const AdamState& opt,
                     const std::string& config_fingerprint, const std::filesystem::path& path) {
    const std::span<const double> enc = model.encoder().params();
    const std::span<const double> head = model.head();
    // ordered_json keeps the magic string at the head of the artifact.
    nlohmann::ordered_json j{{"magic", kCheckpointMagic},
                             {"encoder", model.encoder().encoder_config()},
                             {"encoder_id", model.encoder().encoder_id()},
                             {"d_model", model.d_model()},
                             {"encoder_params", std::vector<double>(enc.begin(), enc.end())},
                             {"score_head", std::vector<double>(head.begin(), head.end())},
                             {"optimizer",
                              {{"step", opt.step},
                               {"beta1", opt.beta1},
                               {"beta2", opt.beta2},
                               {"eps", opt.eps},
                               {"m", opt.m},
                               {"v", opt.v}}},
                             {"config_fingerprint", config_fingerprint}};
    util::write_file_atomic(path, j.dump() + "\n");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(util::read_file(path), nullptr, false);
    if (j.is_discarded() || j.value("magic", std::string{}) != kCheckpointMagic) {
        throw StateError("not a checkpoint artifact (bad magic): " + path.string());
    }
    auto encoder = make_encoder(j.at("encoder"));
    const auto enc_params = j.at("encoder_params").get<std::vector<double>>();
    std::span<double> enc = encoder->params();
    if (enc_params.size() != enc.size()) {
        throw StateError("checkpoint encoder parameter count mismatch: " + path.string());
    }
    std::copy(enc_params.begin(), enc_params.end(), enc.begin());

    CrossEncoderModel model(encoder, j.at("score_head").get<std::vector<double>>());
    AdamState opt;
    const auto& oj = j.at("optimizer");
    opt.step = oj.at("step").get<std::size_t>();
    opt.beta1 = oj.at("beta1").get<double>();
    opt.beta2 = oj.at("beta2").get<double>();
    opt.eps = oj.at("eps").get<double>();
    opt.m = oj.at("m").get<std::vector<double>>();
    opt.v = oj.at("v").get<std::vector<double>>();
    return {std::move(model), std::move(opt), j.value("config_fingerprint", std::string{})};
}

}  // namespace synthrank
