#include "rankbench/error.hpp"
#include "rankbench/train.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace rankbench;

namespace {

constexpr std::size_t kT = 4;
constexpr std::size_t kN = 8;

ModelConfig small_model() {
    ModelConfig c;
    c.d_model = 8;
    c.n_heads = 2;
    c.d_ff = 16;
    c.window = kT;
    c.features = 2;
    return c;
}

// y is an exact linear function of the last input day.
std::vector<WindowSample> linear_samples(std::size_t days, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<WindowSample> out(days);
    for (std::size_t d = 0; d < days; ++d) {
        WindowSample& s = out[d];
        s.x = oracle::normal_vector(rng, kT * kN * 2);
        s.y.resize(kN);
        for (std::size_t i = 0; i < kN; ++i) {
            const double* last = &s.x[((kT - 1) * kN + i) * 2];
            s.y[i] = 0.5 * last[0] - 0.3 * last[1];
        }
        s.anchor_date = "day" + std::to_string(d);
        s.anchor_row = d;
    }
    return out;
}

TrainConfig quick(std::size_t epochs, double lr) {
    TrainConfig tc;
    tc.max_epochs = epochs;
    tc.learning_rate = lr;
    tc.batch_size = 2;
    tc.early_stopping_patience = 10;
    tc.seed = 4;
    return tc;
}

}  // namespace

TEST_CASE("mse training learns a linear target") {
    const auto tr = linear_samples(80, 1);
    const auto va = linear_samples(20, 2);
    const TrainResult r = train(small_model(), tr, va, LossSpec{LossKind::MSE}, quick(60, 0.01));
    double mean = 0.0, n = 0.0;
    for (const auto& s : va)
        for (double v : s.y) {
            mean += v;
            n += 1.0;
        }
    mean /= n;
    double var = 0.0;
    for (const auto& s : va)
        for (double v : s.y) var += (v - mean) * (v - mean);
    var /= n;
    CHECK(r.best_val_loss < 0.1 * var);
    CHECK(r.history.size() <= 60);
}

TEST_CASE("zero learning rate stagnates and stops after patience + 1 epochs") {
    const auto tr = linear_samples(10, 1);
    const auto va = linear_samples(4, 2);
    TrainConfig tc = quick(20, 0.0);
    tc.early_stopping_patience = 1;
    const TrainResult r = train(small_model(), tr, va, LossSpec{LossKind::MSE}, tc);
    CHECK(r.history.size() == 2);
    CHECK(r.stopped_epoch == 2);
    CHECK(r.best_epoch == 1);
    CHECK(r.history[0].val_loss == r.history[1].val_loss);
    CHECK(r.best_params.values == init_params(small_model(), tc.seed).values);
}

TEST_CASE("adamw decay is decoupled from the gradient") {
    Rng rng(3);
    auto theta = oracle::normal_vector(rng, 50);
    const auto before = theta;
    AdamW opt(theta.size(), 0.01);
    const std::vector<double> zero(theta.size(), 0.0);
    opt.step(theta, zero, 0.1);
    const double factor = 1.0 - 0.1 * 0.01;
    for (std::size_t i = 0; i < theta.size(); ++i) CHECK(theta[i] == before[i] * factor);
    CHECK(opt.steps() == 1);
}

TEST_CASE("adamw first step moves each weight by about lr against the gradient") {
    std::vector<double> theta{1.0, -2.0, 0.5};
    AdamW opt(3, 0.0);
    opt.step(theta, std::vector<double>{0.3, -4.0, 1e-3}, 0.01);
    CHECK(theta[0] == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(theta[1] == doctest::Approx(-1.99).epsilon(1e-6));
    CHECK(theta[2] == doctest::Approx(0.49).epsilon(1e-4));
    CHECK_THROWS_AS(opt.step(theta, std::vector<double>{1.0}, 0.01), std::invalid_argument);
}

TEST_CASE("best-epoch contract and determinism") {
    const auto tr = linear_samples(30, 5);
    const auto va = linear_samples(10, 6);
    ModelConfig m = small_model();
    m.dropout = 0.1;
    LossSpec s{LossKind::RankNet};
    TrainConfig tc = quick(12, 0.02);
    tc.early_stopping_patience = 3;
    const TrainResult a = train(m, tr, va, s, tc);
    const TrainResult b = train(m, tr, va, s, tc);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) {
        CHECK(a.history[e].train_loss == b.history[e].train_loss);
        CHECK(a.history[e].val_loss == b.history[e].val_loss);
    }
    CHECK(a.best_params.values == b.best_params.values);

    double best = INFINITY;
    for (const auto& h : a.history) best = std::min(best, h.val_loss);
    CHECK(a.best_val_loss == best);
    CHECK(a.history[a.best_epoch - 1].val_loss == best);
    CHECK(std::abs(evaluate_loss(a.best_params, va, s) - best) <= 1e-6);
    CHECK(a.history.size() <= tc.max_epochs);
}

TEST_CASE("schedules") {
    const auto tr = linear_samples(6, 5);
    const auto va = linear_samples(3, 6);
    TrainConfig tc = quick(6, 0.01);
    tc.lr_schedule.kind = ScheduleKind::Cosine;
    const TrainResult c = train(small_model(), tr, va, LossSpec{LossKind::MSE}, tc);
    CHECK(c.history[0].learning_rate == 0.01);
    for (std::size_t e = 1; e < c.history.size(); ++e) CHECK(c.history[e].learning_rate < c.history[e - 1].learning_rate);
    tc.lr_schedule.kind = ScheduleKind::Constant;
    const TrainResult k = train(small_model(), tr, va, LossSpec{LossKind::MSE}, tc);
    for (const auto& h : k.history) CHECK(h.learning_rate == 0.01);
    CHECK(parse_schedule_kind("plateau") == ScheduleKind::Plateau);
    CHECK_THROWS_AS(parse_schedule_kind("step"), ConfigError);
}

TEST_CASE("plateau schedule halves the rate after patience bad epochs") {
    // Constant training targets give Hinge an empty pair set, so with lambda = 1
    // and no weight decay the parameters never move.
    auto tr = linear_samples(6, 5);
    for (auto& s : tr) std::fill(s.y.begin(), s.y.end(), 0.01);
    const auto va = linear_samples(3, 6);
    TrainConfig tc = quick(5, 0.01);
    tc.weight_decay = 0.0;
    tc.lr_schedule.patience = 1;
    LossSpec hinge{LossKind::Hinge};
    hinge.lambda = 1.0;
    const TrainResult r = train(small_model(), tr, va, hinge, tc);
    REQUIRE(r.history.size() == 5);
    // Epoch 1 improves, epochs 2 and 3 are bad; the second bad epoch exceeds patience.
    CHECK(r.history[1].learning_rate == 0.01);
    CHECK(r.history[2].learning_rate == 0.01);
    CHECK(r.history[3].learning_rate == 0.005);
    CHECK(r.history[4].val_loss == r.history[0].val_loss);
}

TEST_CASE("training errors") {
    const auto tr = linear_samples(4, 1);
    const std::vector<WindowSample> empty;
    CHECK_THROWS_AS(train(small_model(), tr, empty, LossSpec{LossKind::MSE}, quick(2, 0.01)), DataError);
    auto bad = tr;
    bad[1].y[0] = INFINITY;
    CHECK_THROWS_AS(train(small_model(), bad, tr, LossSpec{LossKind::MSE}, quick(2, 0.01)), TrainingError);
    TrainConfig tc = quick(0, 0.01);
    CHECK_THROWS_AS(tc.validate(), ConfigError);
}

TEST_CASE("grid points enumerate with the last axis fastest") {
    GridSpec g;
    g.learning_rate = {0.1, 0.2};
    g.lambda = {0.3, 0.6, 0.9};
    CHECK(g.size() == 6);
    const LossSpec base{LossKind::Hinge};
    const auto p1 = grid_point(g, 1, small_model(), base, TrainConfig{});
    CHECK(p1.train.learning_rate == 0.1);
    CHECK(p1.loss.lambda == 0.6);
    const auto p3 = grid_point(g, 3, small_model(), base, TrainConfig{});
    CHECK(p3.train.learning_rate == 0.2);
    CHECK(p3.loss.lambda == 0.3);
    CHECK_THROWS_AS(grid_point(g, 6, small_model(), base, TrainConfig{}), std::out_of_range);
    CHECK_THROWS_AS(g.validate_for(LossKind::MSE, small_model()), ConfigError);
    CHECK(GridSpec{}.size() == 1);
}

TEST_CASE("grid search") {
    const auto tr = linear_samples(20, 7);
    const auto va = linear_samples(8, 8);
    const TrainConfig tc = quick(4, 0.01);

    GridSpec one;
    one.learning_rate = {0.01};
    const GridResult single = grid_search(one, small_model(), LossSpec{LossKind::MSE}, tc, tr, va);
    REQUIRE(single.leaderboard.size() == 1);
    CHECK(single.best.index == 0);
    CHECK(single.best.train.learning_rate == 0.01);

    GridSpec two;
    two.learning_rate = {0.0, 0.01};
    const GridResult g = grid_search(two, small_model(), LossSpec{LossKind::MSE}, tc, tr, va);
    CHECK(g.best.train.learning_rate == 0.01);
    CHECK(g.leaderboard[0].val_loss <= g.leaderboard[1].val_loss);
    CHECK(g.best_result.best_val_loss == g.leaderboard[0].val_loss);

    GridSpec many;
    many.learning_rate = {0.003, 0.01};
    many.d_ff = {8, 16};
    const GridResult a = grid_search(many, small_model(), LossSpec{LossKind::MSE}, tc, tr, va, 1);
    const GridResult b = grid_search(many, small_model(), LossSpec{LossKind::MSE}, tc, tr, va, 3);
    REQUIRE(a.leaderboard.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.leaderboard[i].point.index == b.leaderboard[i].point.index);
        CHECK(a.leaderboard[i].val_loss == b.leaderboard[i].val_loss);
    }
    CHECK(a.best_result.best_params.values == b.best_result.best_params.values);
}

TEST_CASE("diverging grid points are recorded and ranked last") {
    const auto tr = linear_samples(10, 7);
    const auto va = linear_samples(4, 8);
    GridSpec g;
    g.learning_rate = {1e300, 0.01};
    const GridResult r = grid_search(g, small_model(), LossSpec{LossKind::MSE}, quick(3, 0.01), tr, va);
    REQUIRE(r.leaderboard.size() == 2);
    CHECK(r.best.index == 1);
    CHECK_FALSE(r.leaderboard[0].failed);
    CHECK(r.leaderboard[1].failed);
    CHECK_FALSE(r.leaderboard[1].error.empty());
}
