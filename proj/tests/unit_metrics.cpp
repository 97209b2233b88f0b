#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "svad/corpus.hpp"
#include "svad/metrics.hpp"

using namespace svad;

TEST_CASE("accumulate counts the confusion cells with speech positive") {
  const std::vector<int> preds = {1, 0, 1, 0, 1, 1};
  const std::vector<int> labels = {1, 1, 0, 0, 1, 0};
  const ConfusionCounts c = accumulate(preds, labels);
  CHECK(c.tp == 2);
  CHECK(c.fn == 1);
  CHECK(c.fp == 2);
  CHECK(c.tn == 1);
  CHECK(c.total() == 6);

  const std::vector<uint8_t> pad = {0, 1, 0, 0, 1, 0};
  const ConfusionCounts p = accumulate(preds, labels, &pad);
  CHECK(p.tp == 1);
  CHECK(p.fn == 0);
  CHECK(p.fp == 2);
  CHECK(p.tn == 1);

  CHECK_THROWS(accumulate({1, 0}, {1}));
  CHECK_THROWS(accumulate({2, 0}, {1, 0}));
  CHECK_THROWS(accumulate({1, 0}, {1, -1}));
}

TEST_CASE("hter averages miss rate and false alarm rate") {
  ConfusionCounts c;
  c.tp = 3;
  c.fn = 1;
  c.fp = 1;
  c.tn = 7;
  const MetricsReport r = hter(c);
  CHECK(*r.mr == 0.25);
  CHECK(*r.far == 0.125);
  CHECK(*r.hter == 0.1875);
  CHECK(r.n_frames == 12);

  ConfusionCounts empty;
  CHECK_THROWS(hter(empty));
}

TEST_CASE("rates are absent when a class never occurs") {
  ConfusionCounts no_speech;
  no_speech.fp = 2;
  no_speech.tn = 8;
  const MetricsReport r = hter(no_speech);
  CHECK(!r.mr.has_value());
  CHECK(r.far.has_value());
  CHECK(!r.hter.has_value());
  CHECK(format_rate(r.mr) == "-");
  CHECK(format_rate(r.far) == "20.0");
  CHECK(format_rate(r.hter) == "-");
}

TEST_CASE("display rounding is half to even at one decimal") {
  // 18.75% and 31.25% scale to exactly 187.5 and 312.5 tenths; half to even
  // sends one up and the other down.
  CHECK(round1(18.75) == 18.8);
  CHECK(round1(31.25) == 31.2);
  CHECK(round1(10.44) == 10.4);
  CHECK(round1(10.46) == 10.5);
  CHECK(round1(0.0) == 0.0);

  // Means of one-decimal rates: (10.4 + 27.9) / 2 is 19.1499...9 in binary,
  // strictly below the midpoint, so it must display 19.1. Rounding a scaled
  // copy instead of the value itself would drag it up onto 191.5 and emit
  // 19.2.
  CHECK(round1((10.4 + 27.9) / 2.0) == 19.1);
  CHECK(round1((19.5 + 26.9) / 2.0) == 23.2);
  CHECK(round1((24.6 + 29.8) / 2.0) == 27.2);

  ConfusionCounts a;  // MR 1/4, FAR 1/8 -> HTER 3/16 = 18.75%
  a.tp = 3;
  a.fn = 1;
  a.fp = 1;
  a.tn = 7;
  CHECK(format_rate(hter(a).hter) == "18.8");

  ConfusionCounts b;  // MR 1/4, FAR 3/8 -> HTER 5/16 = 31.25%
  b.tp = 3;
  b.fn = 1;
  b.fp = 3;
  b.tn = 5;
  CHECK(format_rate(hter(b).hter) == "31.2");
}

TEST_CASE("snr values bucket into severity levels") {
  CHECK(level_of(15.0) == "low");
  CHECK(level_of(10.0) == "low");
  CHECK(level_of(5.0) == "medium");
  CHECK(level_of(0.0) == "medium");
  CHECK(level_of(-5.0) == "high");
  CHECK(level_of(-10.0) == "high");
  CHECK(level_of(7.5) == "unassigned");
  CHECK(kLowSnrs == std::vector<double>{15.0, 10.0});
  CHECK(kMediumSnrs == std::vector<double>{5.0, 0.0});
  CHECK(kHighSnrs == std::vector<double>{-5.0, -10.0});
}

TEST_CASE("per-level grouping pools counts before computing rates") {
  // Two medium utterances whose pooled rates differ from the mean of their
  // per-utterance rates: pooled MR 2/12, FAR 2/14 -> HTER 15.5%, while the
  // mean of per-utterance HTERs would be 27.5%.
  ConfusionCounts u1;
  u1.tp = 9;
  u1.fn = 1;
  u1.fp = 0;
  u1.tn = 10;
  ConfusionCounts u2;
  u2.tp = 1;
  u2.fn = 1;
  u2.fp = 2;
  u2.tn = 2;
  ConfusionCounts u3;  // one low utterance
  u3.tp = 4;
  u3.fn = 0;
  u3.fp = 0;
  u3.tn = 4;

  const auto rows = group_by_level({u1, u2, u3}, {5.0, 0.0, 15.0});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].level == "low");
  CHECK(rows[1].level == "medium");
  CHECK(rows[2].level == "overall");
  CHECK(format_rate(rows[1].metrics.hter) == "15.5");
  CHECK(rows[1].metrics.n_frames == 26);
  CHECK(rows[0].metrics.n_frames == 8);
  CHECK(*rows[0].metrics.hter == 0.0);
  CHECK(rows[2].metrics.n_frames == 34);

  // Unknown snr goes to its own bucket, listed before overall.
  const auto rows2 = group_by_level({u1, u2}, {7.5, -5.0});
  REQUIRE(rows2.size() == 3);
  CHECK(rows2[0].level == "high");
  CHECK(rows2[1].level == "unassigned");
  CHECK(rows2[2].level == "overall");

  CHECK_THROWS(group_by_level({u1}, {5.0, 0.0}));
}

TEST_CASE("text report lays out one aligned row per level") {
  ConfusionCounts a;
  a.tp = 3;
  a.fn = 1;
  a.fp = 1;
  a.tn = 7;
  const auto rows = group_by_level({a}, {15.0});
  const std::string text = report_text(rows);
  CHECK(text.find("level") != std::string::npos);
  CHECK(text.find("HTER%") != std::string::npos);
  CHECK(text.find("low") != std::string::npos);
  CHECK(text.find("18.8") != std::string::npos);
  CHECK(text.find("overall") != std::string::npos);

  const std::string tsv = report_delimited(rows);
  CHECK(tsv.find("level\tmr\tfar\thter\tn_frames\n") == 0);
  CHECK(tsv.find("\t18.75\t") != std::string::npos);
  CHECK(tsv.find("low\t25\t12.5\t18.75\t12\n") != std::string::npos);
}

TEST_CASE("parse_levels accepts severity names in any mix") {
  CHECK(parse_levels("low") == kLowSnrs);
  CHECK(parse_levels("low,med") == std::vector<double>{15.0, 10.0, 5.0, 0.0});
  CHECK(parse_levels("low,medium,high") ==
        std::vector<double>{15.0, 10.0, 5.0, 0.0, -5.0, -10.0});
  CHECK(parse_levels("high") == kHighSnrs);
  CHECK_THROWS(parse_levels("loud"));
  CHECK_THROWS(parse_levels(""));
}
