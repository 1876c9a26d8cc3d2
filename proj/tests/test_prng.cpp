//
// Copyright 2026 The Minirec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include "minirec/prng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "gtest/gtest.h"

namespace minirec {
namespace {

TEST(Fnv1a64, ReferenceVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Splitmix64, ReferenceVectors) {
  std::uint64_t s = 0;
  EXPECT_EQ(splitmix64(s), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(splitmix64(s), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(splitmix64(s), 0x06c45d188009454fULL);
}

// Frozen output of an independent transcription of the xoshiro256**
// reference algorithm; any platform or refactoring drift breaks every
// determinism contract downstream, so the raw stream is pinned.
TEST(Prng, PinnedStream) {
  Prng rng(42);
  EXPECT_EQ(rng.next_u64(), 1546998764402558742ULL);
  EXPECT_EQ(rng.next_u64(), 6990951692964543102ULL);
  EXPECT_EQ(rng.next_u64(), 12544586762248559009ULL);
  EXPECT_EQ(rng.next_u64(), 17057574109182124193ULL);
}

TEST(Prng, SameSeedSameSequence) {
  Prng a(123), b(123);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Prng, Uniform01Range) {
  Prng rng(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Prng, BelowIsInRangeAndHitsAllResidues) {
  Prng rng(9);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t v = rng.below(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(rng.below(0), 0u);
  EXPECT_EQ(rng.below(1), 0u);
}

TEST(Prng, NormalMomentsCloseToStandard) {
  Prng rng(11);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(Prng, ShufflePreservesMultisetAndVariesBySeed) {
  std::vector<int> base(50);
  for (int i = 0; i < 50; ++i) base[i] = i;
  std::vector<int> a = base, b = base;
  Prng(1).shuffle(a);
  Prng(2).shuffle(b);
  auto sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  EXPECT_EQ(sa, base);
  EXPECT_EQ(sb, base);
  EXPECT_NE(a, b);
  std::vector<int> c = base;
  Prng(1).shuffle(c);
  EXPECT_EQ(a, c);
}

TEST(Prng, SampleIndicesDistinctAndBounded) {
  Prng rng(13);
  const auto sample = rng.sample_indices(20, 5);
  EXPECT_EQ(sample.size(), 5u);
  std::set<std::size_t> distinct(sample.begin(), sample.end());
  EXPECT_EQ(distinct.size(), 5u);
  for (std::size_t idx : sample) EXPECT_LT(idx, 20u);

  const auto all = Prng(13).sample_indices(6, 6);
  std::set<std::size_t> full(all.begin(), all.end());
  EXPECT_EQ(full.size(), 6u);

  const auto clamped = Prng(13).sample_indices(4, 10);
  EXPECT_EQ(clamped.size(), 4u);
}

TEST(DeriveSeed, DeterministicAndTagSensitive) {
  EXPECT_EQ(derive_seed(7, "fit"), 11990317017971047581ULL);
  EXPECT_EQ(derive_seed(7, "fit"), derive_seed(7, "fit"));
  EXPECT_NE(derive_seed(7, "fit"), derive_seed(7, "plan"));
  EXPECT_NE(derive_seed(7, "fit"), derive_seed(8, "fit"));
}

}  // namespace
}  // namespace minirec
