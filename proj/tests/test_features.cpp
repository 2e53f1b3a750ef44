#include <doctest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "fulfillkit/features.hpp"
#include "support.hpp"

using namespace fulfillkit;
using namespace testsupport;

namespace {

const char* kDic = "%\n1\tshipping\n2\tsorry\n%\nship*\t1\nsorry\t2\ndelay*\t2\n";

bool event_derived(const FeatureSpec& s) {
  return s.availability != TimePoint::TP1 && s.group != FeatureGroup::Baseline;
}

const std::set<std::string> kEventCounts = {"backers", "comments", "updates", "creator_comments", "creator_updates"};

bool is_event_count(const std::string& name) {
  return kEventCounts.count(name) || name.rfind("temporal_slot_", 0) == 0;
}

std::vector<ActivityEvent> random_events(Gen& gen, const ProjectRecord& p, int n) {
  std::vector<ActivityEvent> ev;
  const std::int64_t end = p.ledd() + 30 * kDay;
  for (int i = 0; i < n; ++i) {
    const bool creator = gen.coin(0.4);
    const bool update = creator && gen.coin(0.5);
    const std::int64_t ts = p.launch_ts + static_cast<std::int64_t>(gen.uniform(0, 1) * static_cast<double>(end - p.launch_ts));
    ev.push_back(make_event(p.id, creator ? AuthorRole::Creator : AuthorRole::Backer,
                            update ? EventKind::Update : EventKind::Comment, ts,
                            gen.coin() ? "when will it ship?" : "sorry for the delay",
                            creator ? "" : "b" + std::to_string(gen.integer(0, 5))));
  }
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) { return a.ts < b.ts; });
  return ev;
}

}  // namespace

TEST_CASE("time point cutoffs") {
  ProjectRecord p = make_project("x");
  p.rewards[0].estimated_delivery_ts = p.deadline_ts + 100 * kDay;
  CHECK(cutoff(p, TimePoint::TP1) == doctest::Approx(static_cast<double>(p.launch_ts)));
  CHECK(cutoff(p, TimePoint::TP2) == doctest::Approx(static_cast<double>(p.launch_ts + 15 * kDay)));
  CHECK(cutoff(p, TimePoint::TP3) == doctest::Approx(static_cast<double>(p.deadline_ts)));
  CHECK(cutoff(p, TimePoint::TP4) == doctest::Approx(static_cast<double>(p.deadline_ts + 5 * kDay)));
  CHECK(parse_time_point("TP3") == TimePoint::TP3);
  CHECK_THROWS_AS(parse_time_point("TP5"), Error);
}

TEST_CASE("TP1 vectors carry no event-derived features") {
  const CategoryDictionary dict = CategoryDictionary::parse(kDic);
  FeatureContext ctx;
  ctx.dictionary = &dict;
  const ProjectRecord p = make_project("x");
  Gen gen(1);
  const FeatureVector v = extract_features(p, random_events(gen, p, 20), ctx, TimePoint::TP1);
  for (const auto& s : v.schema) CHECK_FALSE(event_derived(s));
  CHECK(v.get("goal").value() == 1000.0);
  CHECK_FALSE(v.get("comments"));
}

TEST_CASE("projects without events have zero activity at TP3") {
  FeatureContext ctx;
  const ProjectRecord p = make_project("x");
  const FeatureVector tp1 = extract_features(p, {}, ctx, TimePoint::TP1);
  const FeatureVector tp3 = extract_features(p, {}, ctx, TimePoint::TP3);
  for (const char* name : {"backers", "comments", "updates", "creator_comments", "creator_updates"})
    CHECK(tp3.get(name).value() == 0.0);
  for (std::size_t j = 0; j < tp1.schema.size(); ++j) CHECK(tp3.get(tp1.schema[j].name) == tp1.values[j]);
}

TEST_CASE("average update interval over known gaps") {
  const std::string id = "x";
  std::vector<ActivityEvent> ev;
  for (double day : {0.0, 2.0, 7.0, 13.0})
    ev.push_back(make_event(id, AuthorRole::Creator, EventKind::Update,
                            kLaunch + static_cast<std::int64_t>(day * kDay), "update"));
  CHECK(average_update_interval(ev) == doctest::Approx((2.0 + 5.0 + 6.0) / 3.0));
  CHECK(is_missing(average_update_interval({ev[0]})));
}

TEST_CASE("temporal_slots") {
  const std::int64_t launch = kLaunch, deadline = kLaunch + 30 * kDay;
  const auto comment = [&](double day) {
    return make_event("x", AuthorRole::Backer, EventKind::Comment, launch + static_cast<std::int64_t>(day * kDay), "hi");
  };
  auto slots = temporal_slots({comment(3.0)}, launch, deadline, static_cast<double>(deadline), 20);
  CHECK(slots[2] == 1.0);
  CHECK(std::accumulate(slots.begin(), slots.end(), 0.0) == 1.0);
  slots = temporal_slots({}, launch, deadline, static_cast<double>(deadline), 20);
  CHECK(std::all_of(slots.begin(), slots.end(), [](double v) { return v == 0.0; }));
  std::vector<ActivityEvent> many;
  for (double d = 0.5; d < 30; d += 1.0) many.push_back(comment(d));
  slots = temporal_slots(many, launch, deadline, static_cast<double>(launch + 15 * kDay), 20);
  for (int i = 10; i < 20; ++i) CHECK(slots[static_cast<std::size_t>(i)] == 0.0);
}

TEST_CASE("response_latency") {
  using R = AuthorRole;
  using K = EventKind;
  const auto q = [](std::int64_t t) { return make_event("x", R::Backer, K::Comment, t, "is it shipped?"); };
  const auto a = [](std::int64_t t) { return make_event("x", R::Creator, K::Comment, t, "yes"); };
  CHECK(response_latency({q(1000), a(4600)}) == doctest::Approx(3600));
  CHECK(is_missing(response_latency({a(10), q(1000)})));
  CHECK(response_latency({q(0), a(100), q(1000), a(1300)}) == doctest::Approx(200));
}

TEST_CASE("log1p_matrix") {
  FeatureMatrix X;
  X.ids = {"a", "b"};
  X.schema = {{"count", TimePoint::TP1, FeatureGroup::Project, true}, {"flag", TimePoint::TP1, FeatureGroup::Project, false}};
  X.values = Matrix(2, 2);
  X.values << 0, 5, std::exp(1.0) - 1.0, -3;
  const FeatureMatrix Y = log1p_matrix(X);
  CHECK(Y.values(0, 0) == 0.0);
  CHECK(Y.values(1, 0) == doctest::Approx(1.0));
  CHECK(Y.values(1, 1) == -3.0);
  CHECK(Y.log_transformed);
  CHECK_THROWS_AS(log1p_matrix(Y), Error);
  X.values(0, 0) = -1;
  CHECK_THROWS_AS(log1p_matrix(X), Error);
}

TEST_CASE("property: schemas and event counts grow with the time point") {
  const CategoryDictionary dict = CategoryDictionary::parse(kDic);
  FeatureContext ctx;
  ctx.dictionary = &dict;
  Gen gen(17);
  for (int trial = 0; trial < 40; ++trial) {
    ProjectRecord p = make_project("p");
    p.deadline_ts = p.launch_ts + gen.integer(1, 60) * kDay;
    p.rewards[0].estimated_delivery_ts = p.deadline_ts + gen.integer(0, 200) * kDay;
    const auto ev = random_events(gen, p, gen.integer(0, 40));
    std::vector<FeatureVector> v;
    for (auto tp : kTimePoints) v.push_back(extract_features(p, ev, ctx, tp));
    for (std::size_t t = 1; t < v.size(); ++t) {
      std::set<std::string> later;
      for (const auto& s : v[t].schema) later.insert(s.name);
      for (const auto& s : v[t - 1].schema) {
        CHECK(later.count(s.name) == 1);
        if (is_event_count(s.name)) CHECK(*v[t - 1].get(s.name) <= *v[t].get(s.name));
      }
    }
    // Slots cover every in-window comment once the deadline is reached.
    double comments = 0, slot_total = 0;
    for (const auto& e : ev)
      comments += e.kind == EventKind::Comment && e.ts >= p.launch_ts && e.ts < p.deadline_ts;
    for (const auto& s : v[2].schema)
      if (s.name.rfind("temporal_slot_", 0) == 0) slot_total += *v[2].get(s.name);
    CHECK(slot_total == comments);
    CHECK(*v[1].get("comments") >= 0);
    // Events after the TP4 cutoff never change a vector.
    auto extra = ev;
    extra.push_back(make_event(p.id, AuthorRole::Backer, EventKind::Comment, p.ledd() + 400 * kDay, "late?", "zz"));
    const FeatureVector again = extract_features(p, extra, ctx, TimePoint::TP4);
    CHECK(again.schema == v[3].schema);
    for (std::size_t j = 0; j < again.values.size(); ++j)
      CHECK((again.values[j] == v[3].values[j] || (is_missing(again.values[j]) && is_missing(v[3].values[j]))));
  }
}

TEST_CASE("feature_schema agrees with extracted vectors") {
  const CategoryDictionary dict = CategoryDictionary::parse(kDic);
  FeatureContext ctx;
  ctx.dictionary = &dict;
  for (auto tp : kTimePoints) CHECK(feature_schema(ctx, tp) == extract_features(make_project("x"), {}, ctx, tp).schema);
}

TEST_CASE("feature matrices round-trip through CSV") {
  SynthConfig cfg = SynthConfig::defaults();
  cfg.n_projects = 30;
  const Corpus c = generate_synthetic(cfg, 3);
  const CategoryDictionary dict = CategoryDictionary::parse(kDic);
  FeatureContext ctx;
  ctx.dictionary = &dict;
  std::vector<std::string> ids;
  for (const auto& p : c.projects()) ids.push_back(p.id);
  const FeatureMatrix X = build_feature_matrix(c, ctx, TimePoint::TP4, ids);
  TempDir dir("features");
  save_feature_matrix(X, dir.path() / "f.csv", dir.path() / "f.json", "fulfillkit test", TimePoint::TP4);
  const FeatureMatrix Y = load_feature_matrix(dir.path() / "f.csv", dir.path() / "f.json");
  CHECK(Y.ids == X.ids);
  CHECK(Y.schema == X.schema);
  for (Eigen::Index i = 0; i < X.values.rows(); ++i)
    for (Eigen::Index j = 0; j < X.values.cols(); ++j)
      CHECK((Y.values(i, j) == X.values(i, j) || (is_missing(Y.values(i, j)) && is_missing(X.values(i, j)))));
  CHECK(X.columns_in(FeatureGroup::Linguistic).size() == 4);
}
