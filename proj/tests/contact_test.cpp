#include <gtest/gtest.h>

#include <sstream>

#include "fsodl/contact.hpp"
#include "fsodl/rng.hpp"

using namespace fsodl;

namespace {

ContactPlan plan_with_lengths(std::vector<Slots> lengths) {
  ContactPlan p;
  std::int64_t t = 0;
  int id = 0;
  for (auto l : lengths) {
    p.contacts.push_back({id++, t, l, "gs"});
    t += 10000;
  }
  return p;
}

}  // namespace

TEST(SlotsFromDuration, TenMinutePassAtDefaultLinkIsThirtySlots) {
  LinkParams link;  // 20 GB bundles over 8 Gbit/s
  EXPECT_EQ(link.bundle_size_bits, 160'000'000'000);
  EXPECT_DOUBLE_EQ(link.slot_duration_s(), 20.0);
  EXPECT_EQ(slots_from_duration(600.0, link), 30);
}

TEST(SlotsFromDuration, ZeroAndSubSlotDurations) {
  LinkParams link;
  EXPECT_EQ(slots_from_duration(0.0, link), 0);
  EXPECT_EQ(slots_from_duration(0.0, LinkParams{8, 1}), 0);
  // integer oracle: floor(19 * 8e9 / 1.6e11)
  const std::int64_t expected = 19LL * 8'000'000'000LL / 160'000'000'000LL;
  EXPECT_EQ(expected, 0);
  EXPECT_EQ(slots_from_duration(19.0, link), expected);
  EXPECT_EQ(slots_from_duration(19.999, link), 0);
}

TEST(SlotsFromDuration, RejectsNonFiniteAndNegative) {
  LinkParams link;
  EXPECT_THROW(slots_from_duration(std::numeric_limits<double>::infinity(), link), ConfigError);
  EXPECT_THROW(slots_from_duration(std::nan(""), link), ConfigError);
  EXPECT_THROW(slots_from_duration(-1.0, link), ConfigError);
  EXPECT_THROW(slots_from_duration(10.0, LinkParams{0, 1}), ConfigError);
}

TEST(SlotsFromDuration, WholeSlotMultiplesAreExact) {
  LinkParams link;
  for (std::int64_t k = 0; k <= 20000; ++k)
    ASSERT_EQ(slots_from_duration(20.0 * static_cast<double>(k), link), k) << k;
}

TEST(SlotsFromDuration, MonotoneInDuration) {
  LinkParams link;
  Rng rng(3);
  for (int i = 0; i < 20000; ++i) {
    double a = uniform01(rng) * 5000.0, b = uniform01(rng) * 5000.0;
    if (a > b) std::swap(a, b);
    ASSERT_LE(slots_from_duration(a, link), slots_from_duration(b, link)) << a << " " << b;
  }
}

TEST(TotalCapacity, Examples) {
  EXPECT_EQ(total_capacity(synthetic_equal_plan(10, 30)), 300);
  EXPECT_EQ(total_capacity(ContactPlan{}), 0);
  EXPECT_EQ(total_capacity(plan_with_lengths({1, 2, 3})), 6);
}

TEST(RemainingCapacity, Examples) {
  auto p = plan_with_lengths({1, 2, 3});
  EXPECT_EQ(remaining_capacity(p, 0), 6);
  EXPECT_EQ(remaining_capacity(p, 3), 0);
  EXPECT_EQ(remaining_capacity(p, 1), 6 - 1);
  EXPECT_THROW(remaining_capacity(p, 4), ConfigError);
}

TEST(RemainingCapacity, DeltasAreContactLengths) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Slots> lengths(1 + rng() % 15);
    for (auto& l : lengths) l = static_cast<Slots>(rng() % 40);
    auto p = plan_with_lengths(lengths);
    for (std::size_t m = 1; m <= p.size(); ++m)
      ASSERT_EQ(remaining_capacity(p, m - 1) - remaining_capacity(p, m), lengths[m - 1]);
    ASSERT_EQ(remaining_capacity(p, 0), total_capacity(p));
  }
}

TEST(ValidatePlan, OrderedPlanIsClean) {
  EXPECT_TRUE(validate_plan(synthetic_equal_plan(10, 30)).empty());
  EXPECT_TRUE(validate_plan(ContactPlan{}).empty());
}

TEST(ValidatePlan, OverlapNamesBothContacts) {
  ContactPlan p;
  p.contacts = {{4, 0, 30, "a"}, {7, 100, 30, "b"}};  // first ends at 600 s
  auto v = validate_plan(p);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, PlanViolation::Kind::Overlap);
  EXPECT_EQ(v[0].first_id, 4);
  EXPECT_EQ(v[0].second_id, 7);
  EXPECT_NE(v[0].message.find('4'), std::string::npos);
  EXPECT_NE(v[0].message.find('7'), std::string::npos);
}

TEST(ValidatePlan, BackToBackContactsDoNotOverlap) {
  ContactPlan p;
  p.contacts = {{0, 0, 30, "a"}, {1, 600, 30, "b"}};
  EXPECT_TRUE(validate_plan(p).empty());
}

TEST(ValidatePlan, NegativeLengthAndOrdering) {
  ContactPlan p;
  p.contacts = {{0, 0, -3, "a"}};
  auto v = validate_plan(p);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, PlanViolation::Kind::NegativeLength);

  p.contacts = {{0, 1000, 1, "a"}, {1, 0, 1, "b"}};
  v = validate_plan(p);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, PlanViolation::Kind::OutOfOrder);
}

TEST(PlanJson, ReadsLengthInSecondsOrSlots) {
  auto j = nlohmann::json::parse(R"({
    "link": {"bundle_size_bits": 160000000000, "data_rate_bps": 8000000000},
    "contacts": [
      {"id": 0, "start_time_unix_s": 1704067200, "length_s": 610, "ground_station": "ottawa"},
      {"id": 1, "start_time_unix_s": 1704073000, "length_slots": 12, "ground_station": "calgary"}
    ]})");
  auto p = plan_from_json(j);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.contacts[0].length_slots, 30);
  EXPECT_EQ(p.contacts[1].length_slots, 12);
  EXPECT_EQ(p.contacts[1].ground_station, "calgary");
  auto again = plan_from_json(plan_to_json(p));
  EXPECT_EQ(plan_to_json(again), plan_to_json(p));
}

TEST(PlanJson, RejectsMissingLengthAndOverlaps) {
  auto missing = nlohmann::json::parse(R"({
    "link": {"bundle_size_bits": 8, "data_rate_bps": 8},
    "contacts": [{"id": 0, "start_time_unix_s": 0, "ground_station": "x"}]})");
  EXPECT_THROW(plan_from_json(missing), ConfigError);
  auto overlap = nlohmann::json::parse(R"({
    "link": {"bundle_size_bits": 8, "data_rate_bps": 8},
    "contacts": [{"id": 0, "start_time_unix_s": 0, "length_slots": 10, "ground_station": "x"},
                 {"id": 1, "start_time_unix_s": 5, "length_slots": 10, "ground_station": "x"}]})");
  EXPECT_THROW(plan_from_json(overlap), ConfigError);
  EXPECT_THROW(plan_from_json(nlohmann::json::parse("{}")), ConfigError);
}
