#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "fatdual/error.hpp"
#include "fatdual/rng.hpp"

namespace fatdual {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Field concept (duck-typed): a small value-semantic object exposing
//   using Elem;
//   Elem zero()/one(); add/sub/mul/neg/inv; bool is_zero/eq;
//   Elem from_int(long long); Elem sample(Rng&); std::string str(Elem).
// All linear algebra in the library is templated on it.  Exactness is the
// whole point: there is no floating point anywhere.
// ---------------------------------------------------------------------------

/// Deterministic Miller-Rabin, valid for all 64-bit inputs.
inline bool is_prime_u64(uint64_t n) {
  if (n < 2) return false;
  for (uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                     23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  auto mulmod = [](uint64_t a, uint64_t b, uint64_t m) -> uint64_t {
    return static_cast<uint64_t>((__uint128_t)a * b % m);
  };
  auto powmod = [&](uint64_t a, uint64_t e, uint64_t m) -> uint64_t {
    uint64_t r = 1;
    a %= m;
    while (e) {
      if (e & 1) r = mulmod(r, a, m);
      a = mulmod(a, a, m);
      e >>= 1;
    }
    return r;
  };
  uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) d >>= 1, ++s;
  for (uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                     23ULL, 29ULL, 31ULL, 37ULL}) {
    uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// Primes just above 2^31 used for randomized exact computation.  A seed
/// picks a pair; results are verified on a second, independent prime.
inline constexpr std::array<uint64_t, 12> sampling_primes = {
    2147483659ULL, 2147483693ULL, 2147483713ULL, 2147483743ULL,
    2147483777ULL, 2147483783ULL, 2147483813ULL, 2147483857ULL,
    2147483867ULL, 2147483869ULL, 2147483887ULL, 2147483893ULL};

/// Prime field with a runtime modulus.  Elements are canonical residues.
struct FpField {
  uint64_t p = 0;

  using Elem = uint64_t;

  explicit FpField(uint64_t prime = 0) : p(prime) {}

  Elem zero() const { return 0; }
  Elem one() const { return 1 % p; }
  bool is_zero(Elem a) const { return a == 0; }
  bool eq(Elem a, Elem b) const { return a == b; }
  Elem add(Elem a, Elem b) const {
    Elem s = a + b;
    return s >= p ? s - p : s;
  }
  Elem sub(Elem a, Elem b) const { return a >= b ? a - b : a + p - b; }
  Elem neg(Elem a) const { return a == 0 ? 0 : p - a; }
  Elem mul(Elem a, Elem b) const {
    return static_cast<Elem>((__uint128_t)a * b % p);
  }
  Elem inv(Elem a) const {
    FATDUAL_CHECK(a != 0, "division by zero in F_p");
    // extended Euclid
    int64_t t = 0, nt = 1;
    int64_t r = (int64_t)p, nr = (int64_t)a;
    while (nr != 0) {
      int64_t q = r / nr;
      int64_t tmp = t - q * nt;
      t = nt;
      nt = tmp;
      tmp = r - q * nr;
      r = nr;
      nr = tmp;
    }
    FATDUAL_CHECK(r == 1, "non-invertible element");
    if (t < 0) t += (int64_t)p;
    return (Elem)t;
  }
  Elem from_int(long long v) const {
    long long m = v % (long long)p;
    if (m < 0) m += (long long)p;
    return (Elem)m;
  }
  Elem sample(Rng& rng) const { return rng.below(p); }
  std::string str(Elem a) const { return std::to_string(a); }
};

/// Arbitrary-precision rationals (boost cpp_rational); always normalized.
struct RatField {
  using Elem = BigRat;

  Elem zero() const { return Elem(0); }
  Elem one() const { return Elem(1); }
  bool is_zero(const Elem& a) const { return a == 0; }
  bool eq(const Elem& a, const Elem& b) const { return a == b; }
  Elem add(const Elem& a, const Elem& b) const { return a + b; }
  Elem sub(const Elem& a, const Elem& b) const { return a - b; }
  Elem neg(const Elem& a) const { return -a; }
  Elem mul(const Elem& a, const Elem& b) const { return a * b; }
  Elem inv(const Elem& a) const {
    FATDUAL_CHECK(a != 0, "division by zero in Q");
    return 1 / a;
  }
  Elem from_int(long long v) const { return Elem(v); }
  /// Uniform integer from a large box, per the random-element contract.
  Elem sample(Rng& rng) const { return Elem(rng.boxed(1000003)); }
  std::string str(const Elem& a) const {
    return numerator(a).str() + "/" + denominator(a).str();
  }
};

/// GF(q) for q in {2,3,4} with table arithmetic.  GF(4) is F_2[x]/(x^2+x+1).
/// Used only by the finite-field census.
struct SmallField {
  int q = 2;

  using Elem = uint8_t;

  explicit SmallField(int size = 2) : q(size) {
    if (q != 2 && q != 3 && q != 4)
      throw DomainError("bad field size", "census supports q in {2,3,4}");
  }

  Elem zero() const { return 0; }
  Elem one() const { return 1; }
  bool is_zero(Elem a) const { return a == 0; }
  bool eq(Elem a, Elem b) const { return a == b; }
  Elem add(Elem a, Elem b) const {
    if (q == 4) return a ^ b;
    return (Elem)((a + b) % q);
  }
  Elem neg(Elem a) const {
    if (q == 4) return a;
    return (Elem)((q - a) % q);
  }
  Elem sub(Elem a, Elem b) const { return add(a, neg(b)); }
  Elem mul(Elem a, Elem b) const {
    if (q != 4) return (Elem)((a * b) % q);
    // bit representation a = a1*x + a0 over F_2, modulo x^2 + x + 1
    if (a == 0 || b == 0) return 0;
    int a0 = a & 1, a1 = (a >> 1) & 1, b0 = b & 1, b1 = (b >> 1) & 1;
    int c0 = a0 & b0, c1 = (a1 & b0) ^ (a0 & b1), c2 = a1 & b1;
    c1 ^= c2;
    c0 ^= c2; // x^2 = x + 1
    return (Elem)((c1 << 1) | c0);
  }
  Elem inv(Elem a) const {
    FATDUAL_CHECK(a != 0, "division by zero in GF(q)");
    for (int b = 1; b < q; ++b)
      if (eq(mul(a, (Elem)b), one())) return (Elem)b;
    throw InternalError("GF(q) inverse not found");
  }
  Elem from_int(long long v) const {
    if (q == 4) return (Elem)(((v % 2) + 2) % 2); // only 0/1 are canonical ints
    long long m = v % q;
    if (m < 0) m += q;
    return (Elem)m;
  }
  Elem sample(Rng& rng) const { return (Elem)rng.below((uint64_t)q); }
  std::string str(Elem a) const { return std::to_string((int)a); }
};

} // namespace fatdual
