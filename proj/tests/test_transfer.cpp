#include <doctest.h>

#include <cmath>

#include "netad/errors.hpp"
#include "netad/transfer.hpp"
#include "test_support.hpp"

using namespace netad;
using netad::testing::random_dense;
using netad::testing::random_matrix;
using netad::testing::random_model;

namespace {

WindowBatch random_batch(Rng& rng, std::size_t count, std::size_t t, std::size_t n, double shift = 0.0) {
  WindowBatch b{t, t, {}};
  for (std::size_t i = 0; i < count; ++i) {
    Window w{random_matrix(rng, t, n), Label::benign, i * t};
    for (double& v : w.x.values()) v += shift;
    b.windows.push_back(std::move(w));
  }
  return b;
}

double mean_total(const WindowBatch& batch, const AttentionParams& att, const DenseLayer& enc, const DenseLayer& dec,
                  const DetectLossConfig& cfg) {
  double s = 0.0;
  for (const auto& w : batch.windows) s += window_loss(w.x, att, enc, dec, false, cfg).total;
  return s / static_cast<double>(batch.size());
}

TransferConfig config_for(std::vector<TargetTask> targets) {
  TransferConfig c;
  c.task_count = targets.size();
  c.targets = std::move(targets);
  c.training.batch_size = 4;
  c.training.epochs = 3;
  c.training.learning_rate = 1e-2;
  return c;
}

}  // namespace

TEST_CASE("no target tasks reduces to the source loss") {
  Rng rng(1);
  const DetectorModel m = random_model(rng, 4, 3, 2);
  const WindowBatch source = random_batch(rng, 5, 6, 4);
  const DetectLossConfig cfg{0.1, SparsityMode::entropy};
  const TransferLoss l = loss_transfer(make_model_set(m, 0, SharingMode::per_task_decoder), source, config_for({}), cfg);
  CHECK(l.targets.empty());
  CHECK(l.total == l.source);
  CHECK(l.source == doctest::Approx(mean_loss(source, m, cfg)).epsilon(1e-15));
}

TEST_CASE("weighted composition of two target tasks") {
  Rng rng(2);
  const DetectorModel m = random_model(rng, 4, 3, 2);
  const WindowBatch source = random_batch(rng, 5, 6, 4);
  const WindowBatch t1 = random_batch(rng, 3, 6, 4, 0.5);
  const WindowBatch t2 = random_batch(rng, 4, 6, 4, -0.5);
  const DetectLossConfig cfg{0.1, SparsityMode::entropy};
  ModelSet set = make_model_set(m, 2, SharingMode::per_task_decoder);
  set.task_decoders[0] = random_dense(rng, 2, 4);
  set.task_decoders[1] = random_dense(rng, 2, 4);

  const TransferLoss l = loss_transfer(set, source, config_for({{"a", t1, 0.5}, {"b", t2, 2.0}}), cfg);
  const double ls = mean_total(source, m.attention, m.head.encoder, m.head.decoder, cfg);
  const double l1 = mean_total(t1, m.attention, m.head.encoder, set.task_decoders[0], cfg);
  const double l2 = mean_total(t2, m.attention, m.head.encoder, set.task_decoders[1], cfg);
  CHECK(l.source == doctest::Approx(ls).epsilon(1e-14));
  CHECK(l.targets[0] == doctest::Approx(l1).epsilon(1e-14));
  CHECK(l.targets[1] == doctest::Approx(l2).epsilon(1e-14));
  CHECK(l.total == doctest::Approx(ls + 0.5 * l1 + 2.0 * l2).epsilon(1e-14));

  SUBCASE("zero weights drop the tasks") {
    const TransferLoss z = loss_transfer(set, source, config_for({{"a", t1, 0.0}, {"b", t2, 0.0}}), cfg);
    CHECK(z.total == z.source);
  }
  SUBCASE("linear in each weight") {
    for (double w : {0.0, 0.25, 1.0, 3.0}) {
      const TransferLoss v = loss_transfer(set, source, config_for({{"a", t1, w}, {"b", t2, 2.0}}), cfg);
      CHECK(v.total == doctest::Approx(ls + w * l1 + 2.0 * l2).epsilon(1e-13));
    }
  }
  SUBCASE("all shared mode reads the source decoder") {
    const ModelSet shared = make_model_set(m, 2, SharingMode::all_shared);
    const TransferLoss s = loss_transfer(shared, source, config_for({{"a", t1, 1.0}, {"b", t2, 1.0}}), cfg);
    CHECK(s.targets[0] == doctest::Approx(mean_total(t1, m.attention, m.head.encoder, m.head.decoder, cfg)));
  }
}

TEST_CASE("transfer gradients match finite differences") {
  Rng rng(3);
  for (SparsityMode mode : {SparsityMode::entropy, SparsityMode::as_written_l1, SparsityMode::off}) {
    const DetectorModel m = random_model(rng, 4, 3, 2);
    const WindowBatch source = random_batch(rng, 2, 5, 4);
    const TransferConfig tc = config_for({{"a", random_batch(rng, 2, 5, 4, 0.3), 0.7},
                                          {"b", random_batch(rng, 3, 5, 4, -0.2), 1.6}});
    const DetectLossConfig cfg{0.2, mode};
    ModelSet set = make_model_set(m, 2, SharingMode::per_task_decoder);
    set.task_decoders[1] = random_dense(rng, 2, 4);
    set.zero_grad();
    accumulate_transfer_gradients(set, source, tc, cfg);
    auto f = [&] { return loss_transfer(set, source, tc, cfg).total; };
    for (ParamTensor* p : set.parameters()) {
      const GradCheckReport r = finite_diff_check(f, *p, {.samples = 0});
      CHECK_MESSAGE(r.passed, "error ", r.max_relative_error);
    }
  }
}

TEST_CASE("zero target weights reproduce source-only training bit for bit") {
  Rng rng(4);
  const DetectorModel m = random_model(rng, 4, 3, 2);
  const WindowBatch source = random_batch(rng, 10, 6, 4);
  TransferConfig tc = config_for({{"a", random_batch(rng, 6, 6, 4, 1.0), 0.0}});
  const DetectLossConfig cfg{0.1, SparsityMode::entropy};
  const FineTuneResult ft = fine_tune(m, source, tc, cfg);
  const TrainResult tr = train(m, source, tc.training, cfg);
  CHECK(to_json(ft.models.source) == to_json(tr.model));
  CHECK(ft.source_curve == tr.curve);
  CHECK(ft.models.task_decoders[0] == m.head.decoder);
}

TEST_CASE("zero epochs return the pretrained model") {
  Rng rng(5);
  const DetectorModel m = random_model(rng, 4, 3, 2);
  TransferConfig tc = config_for({{"a", random_batch(rng, 6, 6, 4), 1.0}});
  tc.training.epochs = 0;
  const FineTuneResult ft = fine_tune(m, random_batch(rng, 4, 6, 4), tc, {});
  CHECK(to_json(ft.models.source) == to_json(m));
  CHECK(ft.total_curve.size() == 1);
  CHECK(ft.task_curves[0].size() == 1);
}

TEST_CASE("fine tuning lowers the target loss") {
  Rng rng(6);
  const DetectorModel m = random_model(rng, 4, 3, 2);
  TransferConfig tc = config_for({{"shifted", random_batch(rng, 12, 6, 4, 1.5), 1.0}});
  tc.training.epochs = 20;
  const FineTuneResult ft = fine_tune(m, random_batch(rng, 12, 6, 4), tc, {});
  CHECK(ft.task_curves[0].back() < ft.task_curves[0].front());
  CHECK(ft.total_curve.size() == 21);
}

TEST_CASE("transfer configuration errors") {
  Rng rng(7);
  const DetectorModel m = random_model(rng, 4, 3, 2);
  const WindowBatch source = random_batch(rng, 4, 6, 4);
  TransferConfig tc = config_for({{"a", random_batch(rng, 4, 6, 4), 1.0}});
  tc.task_count = 2;
  CHECK_THROWS_AS(fine_tune(m, source, tc, {}), ConfigError);

  TransferConfig wide = config_for({{"wide", random_batch(rng, 4, 6, 5), 1.0}});
  CHECK_THROWS_AS(fine_tune(m, source, wide, {}), ShapeError);

  TransferConfig negative = config_for({{"a", random_batch(rng, 4, 6, 4), -1.0}});
  CHECK_THROWS_AS(fine_tune(m, source, negative, {}), ConfigError);

  CHECK_THROWS_AS(sharing_from_string("mixed"), ConfigError);
  CHECK(sharing_from_string(to_string(SharingMode::all_shared)) == SharingMode::all_shared);
}

TEST_CASE("epochs to reach a target") {
  const std::vector<double> curve = {5.0, 3.0, 2.0, 1.5, 1.4};
  CHECK(epochs_to_reach(curve, 2.0) == 2u);
  CHECK(epochs_to_reach(curve, 6.0) == 0u);
  CHECK_FALSE(epochs_to_reach(curve, 1.0).has_value());
}
