#include <catch2/catch_amalgamated.hpp>

#include <set>

#include <lgn/connectome.hpp>

#include "support/oracle.hpp"

using namespace lgn;

namespace
{

/*! Naive per-gate reference for soft selection, one slot. */
std::vector<double> select_oracle( connectome_spec<double> const& spec, int slot,
                                   std::vector<double> const& prev_row )
{
  std::vector<double> out( spec.width );
  for ( i32 g = 0; g < spec.width; ++g )
  {
    if ( spec.strategy == wiring::fixed )
    {
      out[g] = prev_row[spec.candidates[2 * g + slot]];
      continue;
    }
    std::vector<double> logits;
    std::vector<i32> cand;
    if ( spec.strategy == wiring::top_k )
    {
      for ( i32 j = 0; j < spec.k; ++j )
      {
        logits.push_back( spec.logits[( 2 * g + slot ) * spec.k + j] );
        cand.push_back( spec.candidates[( 2 * g + slot ) * spec.k + j] );
      }
    }
    else
    {
      for ( i32 i = 0; i < spec.in_dim; ++i )
      {
        logits.push_back( spec.slot_logits( slot )[g * spec.in_dim + i] );
        cand.push_back( i );
      }
    }
    auto const w = oracle::softmax_lse( logits, spec.tau_c );
    double acc = 0;
    for ( std::size_t j = 0; j < w.size(); ++j )
      acc += w[j] * prev_row[cand[j]];
    out[g] = acc;
  }
  return out;
}

matrix<double> random_prev( std::size_t batch, i32 in_dim, u64 seed )
{
  return oracle::random_unit<double>( batch, in_dim, seed );
}

} // namespace

TEST_CASE( "init_connectome: shapes, ranges, per-slot distinctness" )
{
  auto spec = init_connectome<double>( wiring::top_k, 784, 2000, 8, 3 );
  REQUIRE( spec.candidates.size() == 2000u * 2 * 8 );
  REQUIRE( spec.logits.size() == 2000u * 2 * 8 );
  for ( i32 idx : spec.candidates )
    REQUIRE( ( idx >= 0 && idx < 784 ) );
  for ( i32 g = 0; g < 2000; ++g )
  {
    for ( int slot = 0; slot < 2; ++slot )
    {
      std::set<i32> seen;
      for ( i32 j = 0; j < 8; ++j )
        seen.insert( spec.candidates[( 2 * g + slot ) * 8 + j] );
      REQUIRE( seen.size() == 8u );
    }
  }
  CHECK_NOTHROW( validate( spec ) );
}

TEST_CASE( "init_connectome: determinism and forced saturation" )
{
  auto a = init_connectome<float>( wiring::fixed, 10, 4, 0, 7 );
  auto b = init_connectome<float>( wiring::fixed, 10, 4, 0, 7 );
  CHECK( a.candidates == b.candidates );

  auto t1 = init_connectome<float>( wiring::top_k, 32, 16, 8, 21 );
  auto t2 = init_connectome<float>( wiring::top_k, 32, 16, 8, 21 );
  CHECK( t1.candidates == t2.candidates );
  CHECK( t1.logits == t2.logits );

  // K = in_dim: every slot must hold exactly {0..in_dim-1}
  auto sat = init_connectome<double>( wiring::top_k, 8, 6, 8, 5 );
  for ( i32 g = 0; g < 6; ++g )
    for ( int slot = 0; slot < 2; ++slot )
    {
      std::set<i32> seen;
      for ( i32 j = 0; j < 8; ++j )
        seen.insert( sat.candidates[( 2 * g + slot ) * 8 + j] );
      REQUIRE( seen == std::set<i32>{ 0, 1, 2, 3, 4, 5, 6, 7 } );
    }
}

TEST_CASE( "init_connectome: rejects bad K" )
{
  CHECK_THROWS_AS( init_connectome<double>( wiring::top_k, 8, 4, 9, 1 ), invalid_argument );
  CHECK_THROWS_AS( init_connectome<double>( wiring::top_k, 8, 4, 1, 1 ), invalid_argument );
  CHECK_THROWS_AS( init_connectome<double>( wiring::fixed, 0, 4, 0, 1 ), invalid_argument );
}

TEST_CASE( "soft_select_inputs: saturated and uniform slots" )
{
  connectome_spec<double> spec;
  spec.strategy = wiring::top_k;
  spec.in_dim = 4;
  spec.width = 1;
  spec.k = 4;
  spec.candidates = { 0, 1, 2, 3, 0, 1, 2, 3 };
  spec.logits = { 30, 0, 0, 0, /* slot b uniform: */ 0, 0, 0, 0 };

  matrix<double> prev( 1, 4 );
  prev( 0, 0 ) = 0.0;
  prev( 0, 1 ) = 1.0;
  prev( 0, 2 ) = 1.0;
  prev( 0, 3 ) = 0.0;

  select_cache<double> cache;
  soft_select_inputs( spec, prev, cache );
  CHECK( std::abs( cache.a( 0, 0 ) - prev( 0, 0 ) ) < 1e-6 ); // saturated on candidate 0
  CHECK( cache.b( 0, 0 ) == Catch::Approx( 0.5 ) );           // uniform mean of {0,1,1,0}
}

TEST_CASE( "soft_select_inputs: matches the scalar oracle on all strategies" )
{
  std::size_t const batch = 3;
  for ( auto strategy : { wiring::fixed, wiring::top_k, wiring::learnable } )
  {
    auto spec = init_connectome<double>( strategy, 12, 9, 4, 77 );
    auto prev = random_prev( batch, 12, 123 );
    select_cache<double> cache;
    soft_select_inputs( spec, prev, cache );
    for ( std::size_t s = 0; s < batch; ++s )
    {
      std::vector<double> row( prev.row( s ).begin(), prev.row( s ).end() );
      auto const want_a = select_oracle( spec, 0, row );
      auto const want_b = select_oracle( spec, 1, row );
      for ( i32 g = 0; g < spec.width; ++g )
      {
        REQUIRE( std::abs( cache.a( s, g ) - want_a[g] ) < 1e-6 );
        REQUIRE( std::abs( cache.b( s, g ) - want_b[g] ) < 1e-6 );
      }
    }
  }
}

TEST_CASE( "soft selection is convex over the slot's candidates" )
{
  for ( auto strategy : { wiring::top_k, wiring::learnable } )
  {
    auto spec = init_connectome<double>( strategy, 20, 15, 6, 4242 );
    auto prev = random_prev( 5, 20, 999 );
    select_cache<double> cache;
    soft_select_inputs( spec, prev, cache );
    for ( std::size_t s = 0; s < 5; ++s )
    {
      for ( i32 g = 0; g < spec.width; ++g )
      {
        double lo_a = 1, hi_a = 0, lo_b = 1, hi_b = 0;
        if ( strategy == wiring::top_k )
        {
          for ( i32 j = 0; j < spec.k; ++j )
          {
            double const va = prev( s, spec.candidates[( 2 * g ) * spec.k + j] );
            double const vb = prev( s, spec.candidates[( 2 * g + 1 ) * spec.k + j] );
            lo_a = std::min( lo_a, va );
            hi_a = std::max( hi_a, va );
            lo_b = std::min( lo_b, vb );
            hi_b = std::max( hi_b, vb );
          }
        }
        else
        {
          for ( i32 i = 0; i < spec.in_dim; ++i )
          {
            lo_a = std::min( lo_a, prev( s, i ) );
            hi_a = std::max( hi_a, prev( s, i ) );
          }
          lo_b = lo_a;
          hi_b = hi_a;
        }
        REQUIRE( cache.a( s, g ) >= lo_a - 1e-12 );
        REQUIRE( cache.a( s, g ) <= hi_a + 1e-12 );
        REQUIRE( cache.b( s, g ) >= lo_b - 1e-12 );
        REQUIRE( cache.b( s, g ) <= hi_b + 1e-12 );
      }
    }
  }
}

TEST_CASE( "soft selection converges to hard selection as the logit gap grows" )
{
  auto spec = init_connectome<double>( wiring::top_k, 16, 10, 4, 8 );
  // push one candidate per slot to +40
  for ( i32 g = 0; g < spec.width; ++g )
    for ( int slot = 0; slot < 2; ++slot )
      spec.logits[( 2 * g + slot ) * spec.k + ( g % spec.k )] = 40.0;
  auto prev = random_prev( 2, 16, 31 );
  select_cache<double> cache;
  soft_select_inputs( spec, prev, cache );
  auto const hard = harden( spec );
  for ( std::size_t s = 0; s < 2; ++s )
    for ( i32 g = 0; g < spec.width; ++g )
    {
      REQUIRE( std::abs( cache.a( s, g ) - prev( s, hard( g, 0 ) ) ) <= 1e-6 );
      REQUIRE( std::abs( cache.b( s, g ) - prev( s, hard( g, 1 ) ) ) <= 1e-6 );
    }
}

TEST_CASE( "backward_select: saturated slots give near-zero logit gradients" )
{
  auto spec = init_connectome<double>( wiring::top_k, 8, 4, 3, 2 );
  for ( std::size_t i = 0; i < spec.logits.size(); ++i )
    spec.logits[i] = ( i % 3 == 0 ) ? 40.0 : 0.0;
  auto prev = random_prev( 2, 8, 11 );
  select_cache<double> cache;
  soft_select_inputs( spec, prev, cache );
  matrix<double> ga( 2, 4, 1.0 ), gb( 2, 4, 1.0 );
  std::vector<double> dlogits;
  backward_select( spec, cache, prev, ga, gb, dlogits, nullptr );
  for ( double d : dlogits )
    CHECK( std::abs( d ) < 1e-12 );
}

TEST_CASE( "backward_select: fixed wiring scatters gradients to wired positions only" )
{
  connectome_spec<double> spec;
  spec.strategy = wiring::fixed;
  spec.in_dim = 6;
  spec.width = 2;
  spec.candidates = { 1, 4, 1, 5 }; // gate0: (1,4), gate1: (1,5)
  auto prev = random_prev( 1, 6, 3 );
  select_cache<double> cache;
  soft_select_inputs( spec, prev, cache );
  matrix<double> ga( 1, 2 ), gb( 1, 2 );
  ga( 0, 0 ) = 1.0;
  ga( 0, 1 ) = 2.0;
  gb( 0, 0 ) = 3.0;
  gb( 0, 1 ) = 4.0;
  std::vector<double> dlogits;
  matrix<double> dprev;
  backward_select( spec, cache, prev, ga, gb, dlogits, &dprev );
  CHECK( dprev( 0, 0 ) == 0.0 );
  CHECK( dprev( 0, 1 ) == 3.0 ); // 1.0 + 2.0 through slot a
  CHECK( dprev( 0, 2 ) == 0.0 );
  CHECK( dprev( 0, 3 ) == 0.0 );
  CHECK( dprev( 0, 4 ) == 3.0 );
  CHECK( dprev( 0, 5 ) == 4.0 );
}

TEST_CASE( "backward_select: missing cache is an error" )
{
  auto spec = init_connectome<double>( wiring::top_k, 8, 4, 3, 2 );
  auto prev = random_prev( 1, 8, 1 );
  select_cache<double> cache;
  matrix<double> g( 1, 4, 1.0 );
  std::vector<double> dlogits;
  CHECK_THROWS_AS( backward_select( spec, cache, prev, g, g, dlogits, nullptr ),
                   invalid_argument );
}

static void check_select_gradients( wiring strategy, u64 seed )
{
  std::size_t const batch = 2;
  auto spec = init_connectome<double>( strategy, 7, 5, 3, seed );
  auto prev = random_prev( batch, 7, seed + 1 );
  auto ga = oracle::random_logits<double>( batch, 5, seed + 2, 1.0 );
  auto gb = oracle::random_logits<double>( batch, 5, seed + 3, 1.0 );

  auto objective = [&]() {
    select_cache<double> cache;
    soft_select_inputs( spec, prev, cache );
    double sum = 0;
    for ( std::size_t s = 0; s < batch; ++s )
      for ( i32 g = 0; g < 5; ++g )
        sum += ga( s, g ) * cache.a( s, g ) + gb( s, g ) * cache.b( s, g );
    return sum;
  };

  select_cache<double> cache;
  soft_select_inputs( spec, prev, cache );
  std::vector<double> dlogits;
  matrix<double> dprev;
  backward_select( spec, cache, prev, ga, gb, dlogits, &dprev );

  for ( std::size_t i = 0; i < spec.logits.size(); ++i )
  {
    double const fd = oracle::central_diff( &spec.logits[i], objective );
    REQUIRE( oracle::rel_err( dlogits[i], fd ) < 1e-4 );
  }
  for ( std::size_t s = 0; s < batch; ++s )
    for ( i32 i = 0; i < 7; ++i )
    {
      double const fd = oracle::central_diff( &prev( s, i ), objective );
      REQUIRE( oracle::rel_err( dprev( s, i ), fd ) < 1e-4 );
    }
}

TEST_CASE( "backward_select: finite differences agree for top_k and learnable" )
{
  for ( u64 seed : { 101u, 102u } )
  {
    check_select_gradients( wiring::top_k, seed );
    check_select_gradients( wiring::learnable, seed );
  }
}

TEST_CASE( "harden: argmax, tie rules, and shift invariance" )
{
  connectome_spec<double> spec;
  spec.strategy = wiring::top_k;
  spec.in_dim = 10;
  spec.width = 2;
  spec.k = 3;
  spec.candidates = { 5, 9, 3, 5, 9, 3, /* gate1 */ 2, 7, 0, 2, 7, 0 };
  spec.logits = { 0.1, 2.0, -1.0, 1.5, 1.5, 0.0, /* gate1 */ 1.0, 1.0, 1.0, -2.0, 0.5, 0.3 };

  auto t = harden( spec );
  CHECK( t( 0, 0 ) == 9 ); // plain argmax
  CHECK( t( 0, 1 ) == 5 ); // tie 5 vs 9 -> lower candidate index
  CHECK( t( 1, 0 ) == 0 ); // three-way tie -> lowest candidate
  CHECK( t( 1, 1 ) == 7 );

  // adding a constant per slot must not change the choice
  for ( std::size_t i = 0; i < spec.logits.size(); ++i )
    spec.logits[i] += 3.25;
  CHECK( harden( spec ) == t );
}

TEST_CASE( "top_k with K=in_dim and identity candidates behaves like learnable" )
{
  i32 const in_dim = 6, width = 4;
  auto learn = init_connectome<double>( wiring::learnable, in_dim, width, 0, 55 );

  connectome_spec<double> topk;
  topk.strategy = wiring::top_k;
  topk.in_dim = in_dim;
  topk.width = width;
  topk.k = in_dim;
  topk.candidates.resize( static_cast<std::size_t>( width ) * 2 * in_dim );
  topk.logits.resize( topk.candidates.size() );
  for ( i32 g = 0; g < width; ++g )
    for ( int slot = 0; slot < 2; ++slot )
      for ( i32 i = 0; i < in_dim; ++i )
      {
        topk.candidates[( 2 * g + slot ) * in_dim + i] = i;
        topk.logits[( 2 * g + slot ) * in_dim + i] = learn.slot_logits( slot )[g * in_dim + i];
      }

  auto prev = random_prev( 3, in_dim, 66 );
  select_cache<double> ca, cb;
  soft_select_inputs( topk, prev, ca );
  soft_select_inputs( learn, prev, cb );
  for ( std::size_t s = 0; s < 3; ++s )
    for ( i32 g = 0; g < width; ++g )
    {
      REQUIRE( std::abs( ca.a( s, g ) - cb.a( s, g ) ) < 1e-6 );
      REQUIRE( std::abs( ca.b( s, g ) - cb.b( s, g ) ) < 1e-6 );
    }

  // identical gradient-descent trajectories harden to identical wire tables
  auto step = [&]( connectome_spec<double>& spec ) {
    select_cache<double> cache;
    soft_select_inputs( spec, prev, cache );
    matrix<double> ga( 3, width, 0.5 ), gb( 3, width, -0.25 );
    std::vector<double> dlogits;
    backward_select( spec, cache, prev, ga, gb, dlogits, nullptr );
    for ( std::size_t i = 0; i < spec.logits.size(); ++i )
      spec.logits[i] -= 0.1 * dlogits[i];
  };
  for ( int it = 0; it < 3; ++it )
  {
    step( topk );
    step( learn );
  }
  CHECK( harden( topk ) == harden( learn ) );
}

TEST_CASE( "path_count_upper_bound: powers and saturation" )
{
  CHECK( path_count_upper_bound( 8, 2 ).value == 64u );
  CHECK( path_count_upper_bound( 17, 1 ).value == 17u );
  CHECK( path_count_upper_bound( 2, 10 ).value == 1024u );
  CHECK_FALSE( path_count_upper_bound( 2, 10 ).saturated );

  auto const sat = path_count_upper_bound( 2, 64 );
  CHECK( sat.saturated );
  CHECK( sat.value == std::numeric_limits<u64>::max() );
  CHECK_THROWS_AS( path_count_upper_bound( 0, 3 ), invalid_argument );
}
