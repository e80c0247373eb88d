#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "featforge/toolkit.hpp"
#include "helpers.hpp"

using namespace featforge;
using namespace featforge::toolkit;

static const auto kRec = ff_test::make_record(
    "p1", 48, {{"HR", {{1, 80}, {3, 90}, {5, 70}}}, {"SBP", {{2, 120}}}});

TEST_CASE("get_all_measurements") {
    auto s = get_all_measurements(kRec, "HR");
    REQUIRE(s.size() == 3);
    CHECK(s[0].time == 1);
    CHECK(s[0].value == 80);
    CHECK(get_all_measurements(kRec, "unseen").empty());
}

TEST_CASE("get_in_window: inclusivity and subranges") {
    CHECK(get_in_window(kRec, "HR", 0, 48).size() == 3);  // full window == all
    auto mid = get_in_window(kRec, "HR", 2, 4);
    REQUIRE(mid.size() == 1);
    CHECK(mid[0].value == 90);
    auto point = get_in_window(kRec, "SBP", 2, 2);  // boundary inclusive both ends
    REQUIRE(point.size() == 1);
    CHECK(point[0].value == 120);
    CHECK(get_in_window(kRec, "HR", 10, 20).empty());
    CHECK_THROWS_AS(get_in_window(kRec, "HR", 5, 4), std::invalid_argument);
}

TEST_CASE("last_value_before") {
    CHECK_FALSE(last_value_before(kRec, "HR", 0.5).has_value());  // before first observation
    CHECK(last_value_before(kRec, "HR", 1).value() == 80);        // exactly at an observation
    CHECK(last_value_before(kRec, "HR", 2).value() == 80);
    CHECK(last_value_before(kRec, "HR", 100).value() == 70);
    CHECK_FALSE(last_value_before(kRec, "unseen", 10).has_value());
}

TEST_CASE("count_measurements") {
    CHECK(count_measurements(kRec, "HR") == 3);
    CHECK(count_measurements(kRec, "unseen") == 0);
    CHECK(count_measurements(kRec, "HR") == double(get_all_measurements(kRec, "HR").size()));
}

TEST_CASE("time_since_last") {
    CHECK_FALSE(time_since_last(kRec, "unseen", 10).has_value());
    CHECK(time_since_last(kRec, "HR", 1).value() == 0);  // observation exactly at t
    CHECK(time_since_last(kRec, "HR", 4).value() == 1);
    auto one = ff_test::make_record("p", 48, {{"x", {{1, 5}}}});
    CHECK(time_since_last(one, "x", 4).value() == 3);
}

TEST_CASE("tools agree between restricted and full records") {
    auto restricted = cohort::restrict_record(kRec, {"HR"});
    CHECK(count_measurements(restricted, "HR") == count_measurements(kRec, "HR"));
    auto a = get_in_window(restricted, "HR", 1, 4);
    auto b = get_in_window(kRec, "HR", 1, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    CHECK(last_value_before(restricted, "HR", 2) == last_value_before(kRec, "HR", 2));
}

TEST_CASE("adding an observation never turns last_value_before non-NA into NA") {
    ff_test::Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        auto data = ff_test::random_series(rng, 10);
        auto rec = ff_test::make_record("p", 48, {{"v", data}});
        double t = rng.uniform(0, 48);
        bool before = last_value_before(rec, "v", t).has_value();
        auto augmented = data;
        augmented.emplace_back(rng.uniform(0, t), 1.0);
        std::sort(augmented.begin(), augmented.end());
        auto rec2 = ff_test::make_record("p", 48, {{"v", augmented}});
        bool after = last_value_before(rec2, "v", t).has_value();
        CHECK(after);
        if (before) CHECK(after);
    }
}

TEST_CASE("tool docs: exactly one tool in univariate mode, five otherwise") {
    CHECK(tool_docs().size() == 5);
    std::string uni = render_tool_docs(true);
    std::string multi = render_tool_docs(false);
    auto count_sigs = [](const std::string& text) {
        std::size_t n = 0, pos = 0;
        while ((pos = text.find("->", pos)) != std::string::npos) {
            ++n;
            pos += 2;
        }
        return n;
    };
    CHECK(count_sigs(uni) == 1);
    CHECK(count_sigs(multi) == 5);
    CHECK(uni.find("get_all_measurements") != std::string::npos);
}
