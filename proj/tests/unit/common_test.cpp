#include <doctest.h>

#include <atomic>
#include <sstream>

#include "tempo/common/binary_io.hpp"
#include "tempo/common/csv.hpp"
#include "tempo/common/parallel.hpp"
#include "tempo/common/random.hpp"

using namespace tempo;

TEST_SUITE("common") {
  TEST_CASE("real formatting round-trips") {
    for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 1e-300, 6.02214076e23}) CHECK(csv::parse_real(csv::format_real(v)) == v);
    CHECK(csv::format_real(0.5) == "0.5");
    CHECK(csv::format_real(1.0 / 3.0, 3) == "0.333");
    CHECK(csv::split_line("a,,b") == std::vector<std::string>{"a", "", "b"});
  }

  TEST_CASE("parallel_for visits each index once") {
    std::vector<std::atomic<int>> hits(1000);
    for (std::size_t threads : {1u, 3u, 8u}) {
      set_thread_count(threads);
      for (auto& h : hits) h = 0;
      parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; });
      for (auto& h : hits) CHECK(h == 1);
    }
    set_thread_count(1);
  }

  TEST_CASE("seed mixing separates streams") {
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
    auto a = make_rng(7, 3), b = make_rng(7, 3);
    CHECK(a() == b());
  }

  TEST_CASE("binary helpers") {
    std::stringstream s;
    binary::write_le<std::uint32_t>(s, 0xdeadbeef);
    binary::write_string(s, "hello");
    CHECK(binary::read_le<std::uint32_t>(s, "word") == 0xdeadbeef);
    CHECK(binary::read_string(s, "text") == "hello");
    CHECK_THROWS_AS(binary::read_le<std::uint64_t>(s, "past the end"), IoError);
  }
}
