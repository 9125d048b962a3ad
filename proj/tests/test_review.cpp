#include <gtest/gtest.h>

#include <json.hpp>

#include "autoclean/errors.hpp"
#include "autoclean/io.hpp"
#include "autoclean/reject_local.hpp"
#include "autoclean/review.hpp"
#include "autoclean/synth.hpp"
#include "support.hpp"

using namespace autoclean;
using namespace autoclean::testing;

namespace {

std::vector<std::string> names_of(std::size_t q) { return fibonacci_layout(q).names(); }

OverrideSet random_overrides(KeyedRng& rng, std::size_t n, const std::vector<std::string>& names) {
  OverrideSet set;
  const auto count = rng.index(8);
  for (std::size_t k = 0; k < count; ++k) {
    OverrideEntry e;
    e.trial = rng.index(n);
    const auto pick = rng.index(3);
    e.action = static_cast<OverrideAction>(pick);
    if (e.action == OverrideAction::interpolate || rng.bernoulli(0.5)) e.sensor = names[rng.index(names.size())];
    set.entries.push_back(e);
  }
  return set;
}

// Plan from random thresholds. kappa <= Q - 4 leaves every retained trial
// at least four good sensors to interpolate from.
LocalModel random_model(KeyedRng& rng, const EpochsTensor& e, const SensorLayout& layout) {
  const auto amps = peak_to_peak(e);
  LocalModel m;
  m.sensor_names = layout.names();
  const auto q = static_cast<int>(e.n_sensors());
  for (Eigen::Index j = 0; j < amps.n_sensors(); ++j) {
    const double lo = amps.values.col(j).minCoeff();
    const double hi = amps.values.col(j).maxCoeff();
    m.sensor_taus.push_back(lo + rng.uniform(0.3, 1.0) * (hi - lo));
    m.sensor_bounds.push_back({lo, hi});
  }
  m.kappa_star = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(q - 4)));
  m.rho_star = static_cast<int>(rng.index(static_cast<std::size_t>(m.kappa_star)));
  return m;
}

}  // namespace

TEST(Overrides, DecodeErrorsNameTheField) {
  EXPECT_THROW(decode_overrides("not json"), FormatError);
  EXPECT_THROW(decode_overrides("{\"entries\": []}"), FormatError);
  try {
    decode_overrides(R"({"version": 1, "entries": [{"trial": 0, "action": "keep"}, {"trial": -1, "action": "keep"}]})");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("entries[1].trial"), std::string::npos);
  }
  try {
    decode_overrides(R"({"version": 1, "entries": [{"trial": 0, "action": "erase"}]})");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("entries[0].action"), std::string::npos);
  }
  EXPECT_THROW(decode_overrides(R"({"version": 1, "entries": [{"trial": 0, "action": "keep", "x": 1}]})"), FormatError);
}

TEST(Overrides, ValidateRangesAndNames) {
  const auto names = names_of(4);
  OverrideSet set{{{2, std::nullopt, OverrideAction::reject}}};
  EXPECT_NO_THROW(validate_overrides(set, 3, names));
  set.entries[0].trial = 3;
  try {
    validate_overrides(set, 3, names);
    FAIL();
  } catch (const OverrideError& e) {
    EXPECT_NE(std::string(e.what()).find("entries[0].trial"), std::string::npos);
  }
  OverrideSet unknown{{{0, "S000", OverrideAction::keep}, {1, "Fz", OverrideAction::keep}}};
  try {
    validate_overrides(unknown, 3, names);
    FAIL();
  } catch (const OverrideError& e) {
    EXPECT_NE(std::string(e.what()).find("entries[1].sensor"), std::string::npos);
  }
  OverrideSet no_sensor{{{0, std::nullopt, OverrideAction::interpolate}}};
  EXPECT_THROW(validate_overrides(no_sensor, 3, names), OverrideError);
}

TEST(Overrides, EncodeDecodeRoundTrip) {
  const OverrideSet set{{{4, std::nullopt, OverrideAction::keep},
                         {1, "S002", OverrideAction::interpolate},
                         {1, "S002", OverrideAction::reject}}};
  EXPECT_EQ(decode_overrides(encode_overrides(set)), set);
}

TEST(ApplyOverrides, EmptyIsIdentity) {
  auto log = RejectLog::all_good(3, 4);
  log.trial_verdicts[1] = Verdict::rejected;
  log.cell(0, 2) = CellState::bad_uninterpolated;
  log.provenance["rho_star"] = "1";
  EXPECT_EQ(apply_overrides(log, {}, names_of(4)), log);
}

TEST(ApplyOverrides, LastEntryWins) {
  const auto names = names_of(4);
  const auto log = RejectLog::all_good(3, 4);
  const OverrideSet set{{{1, "S002", OverrideAction::interpolate}, {1, "S002", OverrideAction::reject}}};
  const auto out = apply_overrides(log, set, names);
  EXPECT_EQ(out.cell(1, 2), CellState::bad_uninterpolated);
  const OverrideSet flipped{{{1, "S002", OverrideAction::reject}, {1, "S002", OverrideAction::interpolate}}};
  EXPECT_EQ(apply_overrides(log, flipped, names).cell(1, 2), CellState::bad_interpolated);
  const OverrideSet trials{{{2, std::nullopt, OverrideAction::reject}, {2, std::nullopt, OverrideAction::keep}}};
  EXPECT_FALSE(apply_overrides(log, trials, names).rejected(2));
}

TEST(ApplyOverrides, TrialActions) {
  const auto names = names_of(4);
  auto log = RejectLog::all_good(3, 4);
  log.provenance["rho_star"] = "1";
  log.trial_verdicts[0] = Verdict::rejected;
  log.cell(0, 1) = CellState::bad_uninterpolated;
  log.cell(0, 3) = CellState::bad_uninterpolated;
  log.cell(2, 1) = CellState::bad_interpolated;
  const OverrideSet set{{{0, std::nullopt, OverrideAction::keep}, {2, std::nullopt, OverrideAction::reject}}};
  const auto out = apply_overrides(log, set, names);
  EXPECT_FALSE(out.rejected(0));
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(out.cell(0, j), CellState::good);
  EXPECT_TRUE(out.rejected(2));
  EXPECT_EQ(out.cell(2, 1), CellState::bad_uninterpolated);
  EXPECT_EQ(out.provenance.at("manual_trials"), "0,2");
  EXPECT_EQ(out.manual_trials(), (std::vector<std::size_t>{0, 2}));
}

TEST(ApplyOverrides, ManualTrialMayExceedRho) {
  const auto names = names_of(5);
  auto log = RejectLog::all_good(2, 5);
  log.provenance["rho_star"] = "1";
  const OverrideSet set{{{1, "S000", OverrideAction::interpolate},
                         {1, "S001", OverrideAction::interpolate},
                         {1, "S004", OverrideAction::interpolate}}};
  const auto out = apply_overrides(log, set, names);
  EXPECT_NO_THROW(out.validate());
  EXPECT_EQ(out.interpolation_mask().row(1).count(), 3);
}

TEST(ApplyOverrides, KeptTrialContributesToEvoked) {
  SimConfig c;
  c.n_trials = 12;
  c.n_sensors = 16;
  c.n_times = 40;
  const auto sim = simulate(c);
  auto log = RejectLog::all_good(12, 16);
  log.provenance["rho_star"] = "2";
  log.trial_verdicts[5] = Verdict::rejected;
  const auto before = evoked(apply_reject_log(sim.corrupted, sim.layout, log));
  const auto reviewed = apply_overrides(log, {{{5, std::nullopt, OverrideAction::keep}}}, sim.layout.names());
  const auto after = evoked(apply_reject_log(sim.corrupted, sim.layout, reviewed));
  EXPECT_EQ(before.n_contributing, 11u);
  EXPECT_EQ(after.n_contributing, 12u);
}

TEST(ReviewBundle, ShapesAndDecimation) {
  auto rng = case_rng(140, 0);
  const auto e = random_epochs(rng, 3, 5, 100);
  const auto layout = fibonacci_layout(5);
  auto log = RejectLog::all_good(3, 5);
  log.trial_verdicts[2] = Verdict::rejected;
  log.cell(1, 4) = CellState::bad_interpolated;
  log.cell(2, 0) = CellState::bad_uninterpolated;

  const auto full = nlohmann::json::parse(make_review_bundle(e, layout, log, 1, {7, 8, 9}));
  EXPECT_EQ(full["series"][0][0].size(), 100u);
  EXPECT_EQ(full["series"][1][3][17].get<double>(), e.at(1, 3, 17));

  const auto doc = nlohmann::json::parse(make_review_bundle(e, layout, log, 4));
  EXPECT_EQ(doc["series"][2][4].size(), 25u);
  EXPECT_EQ(doc["series"][2][4][3].get<double>(), e.at(2, 4, 12));
  EXPECT_EQ(doc["trial_boundaries"], nlohmann::json({0, 25, 50}));
  EXPECT_EQ(doc["sensor_names"], nlohmann::json(layout.names()));
  EXPECT_EQ(doc["trial_verdicts"], nlohmann::json({"retained", "retained", "rejected"}));
  EXPECT_EQ(doc["cell_state"][1][4], "i");
  EXPECT_EQ(doc["cell_state"][2][0], "b");
  EXPECT_EQ(doc["cell_state"][0][0], "g");
  EXPECT_THROW(make_review_bundle(e, layout, log, 0), ContractError);
  EXPECT_EQ(default_decimation(e), 1);
  EXPECT_EQ(default_decimation(e, 15 * 24 * 10), 10);
}

TEST(Property, ApplyOverridesIdempotent) {
  for (int k = 0; k < kPropertyCases; ++k) {
    auto rng = case_rng(141, k);
    const auto n = 1 + rng.index(10);
    const auto q = 4 + rng.index(10);
    const auto names = names_of(q);
    BoolMatrix bad(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
    Eigen::MatrixXd scores(bad.rows(), bad.cols());
    for (Eigen::Index i = 0; i < bad.rows(); ++i)
      for (Eigen::Index j = 0; j < bad.cols(); ++j) {
        bad(i, j) = rng.bernoulli(0.3);
        scores(i, j) = bad(i, j) ? rng.uniform(1.0, 2.0) : kNoScore;
      }
    const int kappa = 1 + static_cast<int>(rng.index(q));
    const int rho = static_cast<int>(rng.index(static_cast<std::size_t>(kappa)));
    const auto log = repair_plan(bad, scores, rho, kappa);
    const auto set = random_overrides(rng, n, names);
    const auto once = apply_overrides(log, set, names);
    const auto twice = apply_overrides(once, set, names);
    ASSERT_EQ(once, twice) << "case " << k;
    ASSERT_NO_THROW(once.validate());
    // Cell-level shadowing: the last entry for each target decides its state.
    for (std::size_t a = 0; a < set.entries.size(); ++a) {
      const auto& e = set.entries[a];
      if (!e.sensor) continue;
      bool shadowed = false;
      for (std::size_t b = a + 1; b < set.entries.size(); ++b) {
        shadowed = shadowed || (set.entries[b].trial == e.trial &&
                                (!set.entries[b].sensor || *set.entries[b].sensor == *e.sensor));
      }
      if (shadowed) continue;
      const auto j = static_cast<std::size_t>(std::find(names.begin(), names.end(), *e.sensor) - names.begin());
      const auto expected = e.action == OverrideAction::keep     ? CellState::good
                            : e.action == OverrideAction::reject ? CellState::bad_uninterpolated
                                                                 : CellState::bad_interpolated;
      ASSERT_EQ(once.cell(e.trial, j), expected) << "case " << k << " entry " << a;
    }
  }
}

TEST(Property, EmptyReviewRoundTripBitIdentical) {
  // Draws whose random plan rejects every trial are redrawn.
  int exercised = 0;
  for (int k = 0; exercised < kPropertyCases && k < 3 * kPropertyCases; ++k) {
    auto rng = case_rng(142, k);
    SimConfig c;
    c.n_trials = 4 + rng.index(10);
    c.n_sensors = 8 + rng.index(12);
    c.n_times = 10 + rng.index(20);
    c.p_cell_artifact = rng.uniform(0.0, 0.2);
    c.seed = rng.next_u64();
    const auto sim = simulate(c);
    const auto model = random_model(rng, sim.corrupted, sim.layout);
    if (plan_local(sim.corrupted, sim.layout, model).retained_trials().empty()) continue;
    const auto first = transform(sim.corrupted, sim.layout, model);
    // transform -> log file -> review with no overrides -> transform again.
    const auto log_file = decode_reject_log(encode_reject_log(first.log));
    const auto none = decode_overrides(encode_overrides({}));
    const auto reviewed = apply_overrides(log_file, none, sim.layout.names());
    const auto second = apply_reject_log(sim.corrupted, sim.layout, reviewed, model.spline);
    ASSERT_EQ(reviewed, first.log) << "case " << k;
    ASSERT_EQ(second, first.cleaned) << "case " << k;
    ++exercised;
  }
  EXPECT_EQ(exercised, kPropertyCases);
}
