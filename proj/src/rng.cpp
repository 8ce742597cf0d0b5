#include "stlhr/rng.hpp"

namespace stlhr {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream)
    : key_(splitmix64(splitmix64(splitmix64(seed) ^ replicate) ^ (stream * 0xd1b54a32d192ed03ULL))) {}

CounterRng::result_type CounterRng::operator()() {
  return splitmix64(key_ ^ splitmix64(counter_++));
}

double CounterRng::uniform() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace stlhr
