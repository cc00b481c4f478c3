#include <algorithm>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "driftvote/fleet.hpp"

using namespace driftvote;

namespace {

DeviceMetadata meta(const std::string& id, const std::string& room = "A") {
  return {id, "temperature", {{"room", room}}};
}

DriftAnnouncement ann(const std::string& id, int vote, double z, std::int64_t at, const std::string& room = "A") {
  DriftAnnouncement a;
  a.metadata = meta(id, room);
  a.vote = vote;
  a.z_statistic = z;
  a.window_length = 1000;
  a.sample_index = 500;
  a.issued_at = at;
  return a;
}

constexpr std::int64_t kWindow = 100'000'000;

}  // namespace

TEST(Fleet, MedianAndMad) {
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_DOUBLE_EQ(mad({1, 1, 2, 2, 4, 6, 9}), 1.0);
  EXPECT_THROW(median({}), InputError);
}

TEST(Fleet, AnnouncementJson) {
  auto a = ann("d1", 1, 0.42, 123);
  a.mean_offset = -1.5;
  a.metadata.tags["floor"] = "2";
  const auto j = to_json(a);
  for (const char* k : {"device_id", "sensor_type", "tags", "vote", "z", "mean_offset", "window_length",
                        "sample_index", "issued_at"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_EQ(announcement_from_json(j), a);
  auto broken = j;
  broken.erase("vote");
  EXPECT_THROW(announcement_from_json(broken), FormatError);
}

TEST(Fleet, ManifestRejectsDuplicates) {
  const nlohmann::json dup = nlohmann::json::array({to_json(meta("x")), to_json(meta("x"))});
  EXPECT_THROW(manifest_from_json(dup), FormatError);
  EXPECT_THROW(manifest_from_json(nlohmann::json::object()), FormatError);
  const std::filesystem::path dir = DRIFTVOTE_DATA_DIR;
  EXPECT_EQ(load_manifest(dir / "manifests" / "fleet_5.json").size(), 5u);
  EXPECT_EQ(load_manifest(dir / "manifests" / "fleet_mixed.json").size(), 8u);
}

TEST(Fleet, MatchPeers) {
  const std::vector<DeviceMetadata> all{meta("a"), meta("b"), meta("c", "B"),
                                        {"d", "humidity", {{"room", "A"}}}, {"e", "temperature", {}}};
  const auto peers = match_peers(all[0], all);
  ASSERT_EQ(peers.size(), 1u);
  EXPECT_EQ(peers[0].device_id, "b");
  const DeviceMetadata untagged{"f", "temperature", {}};
  const auto loose = match_peers(untagged, all);
  ASSERT_EQ(loose.size(), 1u);
  EXPECT_EQ(loose[0].device_id, "e");
}

TEST(Fleet, InsufficientPeers) {
  const auto subject = ann("s", 1, 0.3, 0);
  const std::vector<DriftAnnouncement> peers{ann("p1", 1, 0.3, 10)};
  EXPECT_EQ(classify(subject, peers, {}, kWindow, 0).verdict, FleetVerdict::insufficient_peers);
  EXPECT_THROW(classify(ann("s", 0, 0.3, 0), peers, {}, kWindow, 0), InputError);
}

TEST(Fleet, EqualZWithMajorityIsNatural) {
  for (std::size_t n = 3; n <= 9; ++n) {
    std::vector<DriftAnnouncement> peers;
    for (std::size_t i = 0; i < n; ++i) peers.push_back(ann("p" + std::to_string(i), i < (n + 2) / 2 ? 1 : 0, 0.4, 5));
    const auto r = classify(ann("s", 1, 0.4, 0), peers, {}, kWindow, 0);
    EXPECT_EQ(r.verdict, FleetVerdict::natural) << n;
    EXPECT_EQ(r.peer_count, n);
  }
}

TEST(Fleet, OutlierOrLoneVoteIsAbnormal) {
  std::vector<DriftAnnouncement> peers;
  for (int i = 0; i < 4; ++i) peers.push_back(ann("p" + std::to_string(i), 0, 0.05 + 0.001 * i, 10));
  EXPECT_EQ(classify(ann("s", 1, 0.8, 0), peers, {}, kWindow, 0).verdict, FleetVerdict::abnormal);
  for (auto& p : peers) p.vote = 1;
  EXPECT_EQ(classify(ann("s", 1, 0.8, 0), peers, {}, kWindow, 0).verdict, FleetVerdict::abnormal);
  EXPECT_EQ(classify(ann("s", 1, 0.052, 0), peers, {}, kWindow, 0).verdict, FleetVerdict::natural);
}

TEST(Fleet, PermutationInvariantAndIgnoresForeignPeers) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> z(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    std::vector<DriftAnnouncement> peers;
    for (int i = 0; i < 6; ++i) {
      peers.push_back(ann("p" + std::to_string(i), static_cast<int>(rng() % 2), z(rng), 1000 * i));
      if (i % 2) peers.push_back(ann("p" + std::to_string(i), 0, z(rng), 1000 * i + 7));
    }
    const auto subject = ann("s", 1, z(rng), 0);
    const auto base = classify(subject, peers, {}, kWindow, 0);
    std::shuffle(peers.begin(), peers.end(), rng);
    const auto shuffled = classify(subject, peers, {}, kWindow, 0);
    EXPECT_EQ(shuffled.verdict, base.verdict);
    EXPECT_EQ(shuffled.z_values, base.z_values);
    peers.push_back(ann("other", 1, 99.0, 0, "B"));
    peers.push_back(ann("late", 1, 99.0, 5 * kWindow));
    EXPECT_EQ(classify(subject, peers, {}, kWindow, 0).verdict, base.verdict);
  }
}

TEST(Fleet, StoreSnapshotsAreStable) {
  AnnouncementStore store;
  store.add(ann("a", 1, 0.1, 10));
  const auto snap = store.snapshot();
  store.add(ann("b", 1, 0.1, 20));
  EXPECT_EQ(snap->size(), 1u);
  EXPECT_EQ(store.size(), 2u);
  store.prune(15);
  EXPECT_EQ(store.size(), 1u);
}

TEST(Fleet, CorrelationWindowDefault) {
  FleetOptions o;
  EXPECT_EQ(o.window_ms(10'000, 2000), 5 * 10'000 * 2000);
  o.correlation_window_ms = 42;
  EXPECT_EQ(o.window_ms(10'000, 2000), 42);
}

TEST(FleetSim, Scenarios) {
  const std::filesystem::path dir = DRIFTVOTE_DATA_DIR;
  FleetSimConfig c;
  c.devices = load_manifest(dir / "manifests" / "fleet_5.json");
  for (auto s : {FleetScenario::natural, FleetScenario::abnormal}) {
    c.scenario = s;
    const auto r = run_fleet_sim(c);
    EXPECT_TRUE(r.all_correct) << to_json(r).dump();
  }
  c.devices = load_manifest(dir / "manifests" / "fleet_1.json");
  c.scenario = FleetScenario::natural;
  const auto single = run_fleet_sim(c);
  ASSERT_EQ(single.devices.size(), 1u);
  ASSERT_FALSE(single.devices[0].verdicts.empty());
  EXPECT_EQ(single.devices[0].verdicts[0].verdict, FleetVerdict::insufficient_peers);
  c.devices = load_manifest(dir / "manifests" / "fleet_mixed.json");
  c.scenario = FleetScenario::mixed;
  EXPECT_TRUE(run_fleet_sim(c).all_correct);
}
