/*!
  \file rng.hpp
  \brief Deterministic random streams.

  All randomness in the library flows through this header.  std::mt19937_64 is
  bit-exact across platforms, but the standard distributions are not, so the
  draws are implemented by hand.  Sub-streams are derived from a master seed
  with a splitmix64 mix, which keeps independently seeded stages (connectome
  init, per-epoch shuffles, per-image augmentation) reproducible regardless of
  evaluation order or thread count.
*/

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "common.hpp"

namespace lgn
{

inline u64 splitmix64( u64 x )
{
  x += 0x9e3779b97f4a7c15ull;
  x = ( x ^ ( x >> 30 ) ) * 0xbf58476d1ce4e5b9ull;
  x = ( x ^ ( x >> 27 ) ) * 0x94d049bb133111ebull;
  return x ^ ( x >> 31 );
}

/*! Derive a sub-seed for stream (a, b, c) of a master seed. */
inline u64 derive_seed( u64 seed, u64 a, u64 b = 0, u64 c = 0 )
{
  u64 s = splitmix64( seed ^ 0x6c62272e07bb0142ull );
  s = splitmix64( s ^ a );
  s = splitmix64( s ^ b );
  s = splitmix64( s ^ c );
  return s;
}

/*! Named stream ids, one per randomized stage. */
enum class stream : u64
{
  connectome_wiring = 1,
  connectome_logits = 2,
  gate_logits = 3,
  shuffle = 4,
  augment = 5,
  split = 6,
  synthetic = 7
};

class rng
{
public:
  explicit rng( u64 seed ) : engine_( seed ) {}

  rng( u64 seed, stream s, u64 b = 0, u64 c = 0 )
      : engine_( derive_seed( seed, static_cast<u64>( s ), b, c ) )
  {
  }

  u64 next_u64() { return engine_(); }

  /*! Uniform integer in [0, n).  Modulo bias is irrelevant here; determinism is what matters. */
  u64 below( u64 n ) { return engine_() % n; }

  /*! Uniform real in [0, 1). */
  double uniform() { return static_cast<double>( engine_() >> 11 ) * 0x1.0p-53; }

  /*! Uniform real in [lo, hi). */
  double uniform( double lo, double hi ) { return lo + ( hi - lo ) * uniform(); }

  /*! Standard normal via Box-Muller. */
  double normal()
  {
    if ( have_spare_ )
    {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do
    {
      u1 = uniform();
    } while ( u1 <= 0.0 );
    double const u2 = uniform();
    double const r = std::sqrt( -2.0 * std::log( u1 ) );
    double const theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin( theta );
    have_spare_ = true;
    return r * std::cos( theta );
  }

  bool coin() { return ( engine_() >> 63 ) != 0; }

  /*! In-place Fisher-Yates shuffle. */
  template<class T>
  void shuffle( std::vector<T>& v )
  {
    for ( std::size_t i = v.size(); i > 1; --i )
    {
      std::size_t const j = static_cast<std::size_t>( below( i ) );
      std::swap( v[i - 1], v[j] );
    }
  }

  /*! k distinct values from [0, n), by partial Fisher-Yates over an index pool. */
  std::vector<i32> sample_distinct( u64 n, u64 k )
  {
    require( k <= n, "sample_distinct: k exceeds population" );
    std::vector<i32> pool( n );
    for ( u64 i = 0; i < n; ++i )
      pool[i] = static_cast<i32>( i );
    std::vector<i32> out( k );
    for ( u64 i = 0; i < k; ++i )
    {
      u64 const j = i + below( n - i );
      std::swap( pool[i], pool[j] );
      out[i] = pool[i];
    }
    return out;
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace lgn
