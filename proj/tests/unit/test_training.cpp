#include "polygnn/training.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

using namespace polygnn;

namespace {

struct Family {
    std::map<int, Polycrystal> rves;
    std::vector<DeformationSample> samples;
};

Family small_family(int n_rves, int samples_per_rve) {
    Family f;
    std::vector<Polycrystal> list;
    std::vector<int> ids;
    for (int r = 0; r < n_rves; ++r) {
        auto p = generate_polycrystal(std::uint64_t(r) + 1, 4 + r % 3, {8, 8, 8});
        p.orientations = sample_orientations(std::uint64_t(r) + 1, int(p.n_grains()), {});
        list.push_back(p);
        ids.push_back(10 + r);
        f.rves[10 + r] = p;
    }
    DatasetOptions opts;
    opts.samples_per_rve = samples_per_rve;
    f.samples = build_dataset(list, ids, opts);
    return f;
}

TrainConfig tiny_config(Variant v) {
    TrainConfig cfg;
    cfg.variant = v;
    cfg.arch.max_nodes = 6;
    cfg.arch.gcn_channels = {6};
    cfg.arch.encoder_hidden = {8};
    cfg.arch.encoded_dim = 3;
    cfg.arch.mlp_hidden = {16, 16};
    cfg.epochs = 5;
    cfg.batch_size = 8;
    return cfg;
}

}  // namespace

TEST(Variants, NamesAndLosses) {
    for (auto v : {Variant::M_L2_mlp, Variant::M_H1_mlp, Variant::M_H1_hybrid, Variant::M_H1_reg})
        EXPECT_EQ(parse_variant(to_string(v)), v);
    EXPECT_THROW(parse_variant("M_H2_mlp"), std::invalid_argument);
    EXPECT_EQ(loss_kind(Variant::M_L2_mlp), LossKind::L2);
    EXPECT_EQ(loss_kind(Variant::M_H1_reg), LossKind::H1);
    EXPECT_FALSE(uses_graph(Variant::M_H1_mlp));
    EXPECT_TRUE(uses_graph(Variant::M_H1_hybrid));
}

TEST(Variants, OnlyTheRegularizedModelCarriesDropoutAndL2) {
    const auto reg = initial_model(tiny_config(Variant::M_H1_reg));
    const auto hyb = initial_model(tiny_config(Variant::M_H1_hybrid));
    const auto mlp = initial_model(tiny_config(Variant::M_H1_mlp));
    EXPECT_GT(reg.dropout_rate, 0.0);
    EXPECT_GT(reg.l2_coefficient, 0.0);
    EXPECT_EQ(hyb.dropout_rate, 0.0);
    EXPECT_EQ(hyb.l2_coefficient, 0.0);
    EXPECT_TRUE(hyb.arch.use_graph);
    EXPECT_FALSE(mlp.arch.use_graph);
}

TEST(Kfold, FoldSizes) {
    for (auto [n, k, size] : {std::tuple{200, 10, 20}, std::tuple{100, 5, 20}, std::tuple{5, 5, 1}}) {
        const auto f = kfold(std::size_t(n), k, 3);
        for (int fold = 0; fold < k; ++fold) EXPECT_EQ(std::count(f.begin(), f.end(), fold), size);
    }
    const auto uneven = kfold(23, 5, 1);
    for (int fold = 0; fold < 5; ++fold) {
        const auto c = std::count(uneven.begin(), uneven.end(), fold);
        EXPECT_TRUE(c == 4 || c == 5);
    }
    EXPECT_THROW(kfold(3, 4, 0), std::invalid_argument);
    EXPECT_THROW(kfold(3, 1, 0), std::invalid_argument);
}

TEST(Kfold, TestPartitionsAreDisjointAndCover) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 10 + seed * 7;
        const int k = 2 + int(seed % 6);
        const auto f = kfold(n, k, seed);
        std::vector<std::set<std::size_t>> parts(static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < n; ++i) {
            ASSERT_GE(f[i], 0);
            ASSERT_LT(f[i], k);
            parts[std::size_t(f[i])].insert(i);
        }
        std::size_t total = 0;
        for (const auto& p : parts) total += p.size();
        EXPECT_EQ(total, n);
    }
}

TEST(Kfold, RveUnitKeepsSamplesOfOneRveTogether) {
    const auto fam = small_family(4, 3);
    const auto f = kfold_samples(fam.samples, 2, FoldUnit::rve, 0);
    for (std::size_t i = 0; i < fam.samples.size(); ++i)
        for (std::size_t j = 0; j < fam.samples.size(); ++j)
            if (fam.samples[i].rve_id == fam.samples[j].rve_id) EXPECT_EQ(f[i], f[j]);
    EXPECT_EQ(std::count(f.begin(), f.end(), 0), 6);
}

TEST(TrainingData, OneGraphPerRve) {
    const auto fam = small_family(3, 4);
    const auto d = make_training_data(fam.samples, fam.rves, PropagationMode::renormalized_adjacency);
    EXPECT_EQ(d.graphs.size(), 3u);
    EXPECT_EQ(d.graph_rve_ids, (std::vector<int>{10, 11, 12}));
    EXPECT_EQ(d.points.size(), 12u);
    EXPECT_EQ(d.points[5].graph, 1u);
    std::map<int, Polycrystal> missing;
    EXPECT_THROW(make_training_data(fam.samples, missing, PropagationMode::renormalized_adjacency),
                 std::invalid_argument);
}

TEST(Normalization, ScalesInputsToUnitRange) {
    const auto fam = small_family(1, 20);
    const auto d = make_training_data(fam.samples, fam.rves, PropagationMode::renormalized_adjacency);
    const auto n = fit_normalization(d.points);
    double psi_max = 0.0;
    for (const auto& p : d.points) {
        EXPECT_LE(((p.C - n.c_shift).cwiseAbs().array() / n.c_scale.array()).maxCoeff(), 1.0 + 1e-15);
        psi_max = std::max(psi_max, std::abs(p.psi));
    }
    EXPECT_EQ(n.psi_scale, psi_max);
}

TEST(Train, ZeroEpochsReturnsTheInitialization) {
    const auto fam = small_family(2, 10);
    const auto d = make_training_data(fam.samples, fam.rves, PropagationMode::renormalized_adjacency);
    auto cfg = tiny_config(Variant::M_H1_reg);
    cfg.epochs = 0;
    const auto r = train(cfg, d);
    EXPECT_EQ(flatten_parameters(r.params), flatten_parameters(initial_model(cfg)));
    EXPECT_TRUE(r.history.empty());
    EXPECT_EQ(r.best_epoch, -1);
}

TEST(Train, MemorizesATinyDataset) {
    const auto fam = small_family(1, 10);
    const auto d = make_training_data(fam.samples, fam.rves, PropagationMode::renormalized_adjacency);
    auto cfg = tiny_config(Variant::M_L2_mlp);
    cfg.validation_fraction = 0.0;
    cfg.epochs = 5000;
    cfg.batch_size = 10;
    cfg.patience = 200;
    cfg.learning_rate = 3e-3;
    const auto r = train(cfg, d);
    const auto g = evaluate_groups(r.params, d);
    ASSERT_EQ(g.size(), 1u);
    EXPECT_LT(g[0].psi, 1e-6);
    EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
}

TEST(Train, IsBitReproducible) {
    const auto fam = small_family(3, 12);
    const auto d = make_training_data(fam.samples, fam.rves, PropagationMode::renormalized_adjacency);
    auto cfg = tiny_config(Variant::M_H1_reg);
    cfg.epochs = 8;
    const auto a = train(cfg, d), b = train(cfg, d);
    EXPECT_EQ(flatten_parameters(a.params), flatten_parameters(b.params));
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].validation_loss, b.history[i].validation_loss);
    cfg.seed = 1;
    EXPECT_NE(flatten_parameters(train(cfg, d).params), flatten_parameters(a.params));
}

TEST(Train, LearningRateDecaysOnPlateau) {
    const auto fam = small_family(1, 16);
    const auto d = make_training_data(fam.samples, fam.rves, PropagationMode::renormalized_adjacency);
    auto cfg = tiny_config(Variant::M_L2_mlp);
    cfg.epochs = 60;
    cfg.patience = 1;
    cfg.learning_rate = 0.5;
    const auto r = train(cfg, d);
    EXPECT_LT(r.history.back().learning_rate, cfg.learning_rate);
    for (std::size_t i = 1; i < r.history.size(); ++i)
        EXPECT_LE(r.history[i].learning_rate, r.history[i - 1].learning_rate);
    EXPECT_GE(r.history.back().learning_rate, cfg.min_learning_rate);
}

TEST(Train, RveHoldOutKeepsValidationRvesOutOfTraining) {
    const auto fam = small_family(4, 6);
    const auto d = make_training_data(fam.samples, fam.rves, PropagationMode::renormalized_adjacency);
    auto cfg = tiny_config(Variant::M_H1_hybrid);
    cfg.validation_unit = FoldUnit::rve;
    cfg.validation_fraction = 0.25;
    cfg.epochs = 2;
    EXPECT_NO_THROW(train(cfg, d));
}

TEST(Train, InvalidConfigurationsAreRejected) {
    auto cfg = tiny_config(Variant::M_H1_mlp);
    cfg.batch_size = 0;
    EXPECT_THROW(validate(cfg), std::invalid_argument);
    cfg = tiny_config(Variant::M_H1_mlp);
    cfg.decay = 1.5;
    EXPECT_THROW(validate(cfg), std::invalid_argument);
    TrainingData empty;
    EXPECT_THROW(train(tiny_config(Variant::M_H1_mlp), empty), std::invalid_argument);
}

TEST(Evaluate, GroupsByRve) {
    const auto fam = small_family(2, 10);
    const auto d = make_training_data(fam.samples, fam.rves, PropagationMode::renormalized_adjacency);
    const auto g = evaluate_groups(initial_model(tiny_config(Variant::M_H1_hybrid)), d);
    ASSERT_EQ(g.size(), 2u);
    EXPECT_EQ(g[0].rve_id, 10);
    EXPECT_EQ(g[1].n_samples, 10u);
    EXPECT_GT(g[0].psi, 0.0);
}
