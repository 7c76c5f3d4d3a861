#pragma once

#include <cstdint>
#include <cstdlib>
#include <future>
#include <thread>

namespace so3orbit {

/// Observations per leaf of the reduction tree.
inline constexpr std::uint64_t kReduceBlock = 256;

/// Worker count from SO3ORBIT_WORKERS, else the hardware concurrency.
inline int default_workers() {
  if (const char* env = std::getenv("SO3ORBIT_WORKERS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Sum over [begin, end) along a balanced binary tree whose shape depends
/// only on the range: leaves are whole blocks of kReduceBlock indices, and
/// each node splits its blocks in half. The top levels run concurrently, so
/// the result is bitwise identical for every worker count.
///
/// leaf(b, e) returns the partial sum of [b, e); Acc needs operator+=.
template <class Acc, class Leaf>
Acc tree_reduce(std::uint64_t begin, std::uint64_t end, const Leaf& leaf, int workers) {
  const std::uint64_t blocks = (end - begin + kReduceBlock - 1) / kReduceBlock;
  if (blocks <= 1) return leaf(begin, end);
  const std::uint64_t mid = begin + ((blocks + 1) / 2) * kReduceBlock;
  if (workers > 1) {
    const int left_workers = workers / 2;
    auto left = std::async(std::launch::async, [&] {
      return tree_reduce<Acc>(begin, mid, leaf, left_workers);
    });
    Acc right = tree_reduce<Acc>(mid, end, leaf, workers - left_workers);
    Acc out = left.get();
    out += right;
    return out;
  }
  Acc out = tree_reduce<Acc>(begin, mid, leaf, 1);
  out += tree_reduce<Acc>(mid, end, leaf, 1);
  return out;
}

}  // namespace so3orbit
