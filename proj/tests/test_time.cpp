#include <doctest.h>

#include <stdexcept>

#include "cnu/time.hpp"

using namespace cnu;
using namespace std::chrono_literals;

TEST_CASE("durations parse with every unit")
{
    CHECK(parse_duration("262us") == 262us);
    CHECK(parse_duration("4.865ms") == 4865us);
    CHECK(parse_duration("1.297ms") == 1297us);
    CHECK(parse_duration("2s") == 2s);
    CHECK(parse_duration("17ns") == 17ns);
    CHECK(parse_duration("17") == 17ns);
    CHECK(parse_duration("0ms") == 0ns);
}

TEST_CASE("sub-nanosecond digits round half up")
{
    CHECK(parse_duration("1.5ns") == 2ns);
    CHECK(parse_duration("0.0000004ms") == 0ns);
    CHECK(parse_milliseconds("0.0000005") == 1ns);
}

TEST_CASE("malformed durations are rejected")
{
    CHECK_THROWS_AS(parse_duration(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_duration("ms"), std::invalid_argument);
    CHECK_THROWS_AS(parse_duration("5 parsecs"), std::invalid_argument);
    CHECK_THROWS_AS(parse_duration("1.2.3ms"), std::invalid_argument);
}

TEST_CASE("plain milliseconds")
{
    CHECK(parse_milliseconds("0.262") == 262us);
    CHECK(parse_milliseconds("10") == 10ms);
}
