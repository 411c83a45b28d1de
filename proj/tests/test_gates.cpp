#include <catch2/catch_amalgamated.hpp>

#include <lgn/gates.hpp>

#include "support/oracle.hpp"

using namespace lgn;

TEST_CASE( "gate_softmax: uniform, saturated, and oracle rows" )
{
  matrix<double> logits( 1, 16 );
  auto p = gate_softmax( logits, 1.0 );
  for ( int i = 0; i < 16; ++i )
    CHECK( p( 0, i ) == Catch::Approx( 1.0 / 16 ).margin( 1e-12 ) );

  logits( 0, 1 ) = 30.0;
  p = gate_softmax( logits, 1.0 );
  CHECK( std::abs( p( 0, 1 ) - 1.0 ) < 1e-9 );
  for ( int i = 0; i < 16; ++i )
    if ( i != 1 )
      CHECK( p( 0, i ) < 1e-9 );

  auto random = oracle::random_logits<double>( 8, 16, 42 );
  p = gate_softmax( random, 1.0 );
  for ( std::size_t g = 0; g < 8; ++g )
  {
    std::vector<double> row( random.row( g ).begin(), random.row( g ).end() );
    auto const want = oracle::softmax_lse( row, 1.0 );
    for ( int i = 0; i < 16; ++i )
      CHECK( std::abs( p( g, i ) - want[i] ) < 1e-12 );
  }
}

TEST_CASE( "gate_softmax: simplex property and temperature scaling" )
{
  auto logits = oracle::random_logits<float>( 64, 16, 7 );
  for ( float tau : { 0.5f, 1.0f, 3.0f } )
  {
    auto p = gate_softmax( logits, tau );
    for ( std::size_t g = 0; g < p.rows(); ++g )
    {
      float sum = 0;
      for ( int i = 0; i < 16; ++i )
      {
        CHECK( p( g, i ) >= 0.0f );
        sum += p( g, i );
      }
      CHECK( std::abs( sum - 1.0f ) < 1e-6f );
    }
  }
}

TEST_CASE( "gate_softmax: rejects bad parameters" )
{
  matrix<double> logits( 2, 16 );
  CHECK_THROWS_AS( gate_softmax( logits, 0.0 ), invalid_argument );
  logits( 1, 3 ) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS( gate_softmax( logits, 1.0 ), invalid_argument );
  logits( 1, 3 ) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS( gate_softmax( logits, 1.0 ), invalid_argument );
}

TEST_CASE( "project_to_basis: one-hot rows pick the gate's coefficients" )
{
  auto p_and = oracle::one_hot_rows<double>( 1, 1 );
  auto c = project_to_basis( p_and );
  CHECK( c( 0, 0 ) == 0.0 );
  CHECK( c( 0, 1 ) == 0.0 );
  CHECK( c( 0, 2 ) == 0.0 );
  CHECK( c( 0, 3 ) == 1.0 );

  auto p_nand = oracle::one_hot_rows<double>( 1, 14 );
  c = project_to_basis( p_nand );
  CHECK( c( 0, 0 ) == 1.0 );
  CHECK( c( 0, 1 ) == 0.0 );
  CHECK( c( 0, 2 ) == 0.0 );
  CHECK( c( 0, 3 ) == -1.0 );
}

TEST_CASE( "project_to_basis: uniform distribution averages the columns" )
{
  matrix<double> p( 3, 16, 1.0 / 16 );
  auto c = project_to_basis( p );
  for ( std::size_t g = 0; g < 3; ++g )
  {
    CHECK( c( g, 0 ) == Catch::Approx( 0.5 ).margin( 1e-12 ) );
    CHECK( c( g, 1 ) == Catch::Approx( 0.0 ).margin( 1e-12 ) );
    CHECK( c( g, 2 ) == Catch::Approx( 0.0 ).margin( 1e-12 ) );
    CHECK( c( g, 3 ) == Catch::Approx( 0.0 ).margin( 1e-12 ) );
  }
}

TEST_CASE( "soft_eval_basis: fuzzy AND, XOR, and constants" )
{
  matrix<double> c( 1, 4 );
  matrix<double> a( 1, 1 ), b( 1, 1 );

  c( 0, 3 ) = 1.0; // AND
  a( 0, 0 ) = 0.5;
  b( 0, 0 ) = 0.5;
  CHECK( soft_eval_basis( c, a, b )( 0, 0 ) == Catch::Approx( 0.25 ) );

  c.fill( 0 ); // XOR row
  c( 0, 1 ) = 1.0;
  c( 0, 2 ) = 1.0;
  c( 0, 3 ) = -2.0;
  a( 0, 0 ) = 1.0;
  b( 0, 0 ) = 1.0;
  CHECK( soft_eval_basis( c, a, b )( 0, 0 ) == 0.0 );

  c.fill( 0 ); // constant true
  c( 0, 0 ) = 1.0;
  for ( double x : { 0.0, 0.3, 1.0 } )
  {
    a( 0, 0 ) = x;
    b( 0, 0 ) = 1.0 - x;
    CHECK( soft_eval_basis( c, a, b )( 0, 0 ) == 1.0 );
  }
}

TEST_CASE( "soft_eval_full: OR example and uniform mean" )
{
  auto p_or = oracle::one_hot_rows<double>( 1, 7 );
  matrix<double> a( 1, 1 ), b( 1, 1 );
  a( 0, 0 ) = 0.5;
  b( 0, 0 ) = 0.5;
  CHECK( soft_eval_full( p_or, a, b )( 0, 0 ) == Catch::Approx( 0.75 ) );

  matrix<double> uniform( 1, 16, 1.0 / 16 );
  a( 0, 0 ) = 0.0;
  b( 0, 0 ) = 0.0;
  CHECK( soft_eval_full( uniform, a, b )( 0, 0 ) == Catch::Approx( 0.5 ).margin( 1e-12 ) );
}

TEST_CASE( "full evaluation equals basis projection on 1000 random triples" )
{
  rng r( 99 );
  std::size_t const width = 50;
  for ( int trial = 0; trial < 20; ++trial )
  {
    auto logits = oracle::random_logits<double>( width, 16, 1000 + trial, 3.0 );
    auto p = gate_softmax( logits, 1.0 );
    auto c = project_to_basis( p );
    auto a = oracle::random_unit<double>( 1, width, 2000 + trial );
    auto b = oracle::random_unit<double>( 1, width, 3000 + trial );
    auto full = soft_eval_full( p, a, b );
    auto basis = soft_eval_basis( c, a, b );
    for ( std::size_t g = 0; g < width; ++g )
      REQUIRE( std::abs( full( 0, g ) - basis( 0, g ) ) <= 1e-10 );
  }
}

TEST_CASE( "range preservation: simplex distributions keep outputs in [0,1]" )
{
  for ( int trial = 0; trial < 50; ++trial )
  {
    std::size_t const width = 32;
    auto p = gate_softmax( oracle::random_logits<double>( width, 16, 5000 + trial, 4.0 ), 1.0 );
    auto c = project_to_basis( p );
    auto a = oracle::random_unit<double>( 4, width, 6000 + trial );
    auto b = oracle::random_unit<double>( 4, width, 7000 + trial );
    auto out = soft_eval_basis( c, a, b );
    for ( std::size_t s = 0; s < out.rows(); ++s )
      for ( std::size_t g = 0; g < width; ++g )
      {
        REQUIRE( out( s, g ) >= -1e-12 );
        REQUIRE( out( s, g ) <= 1.0 + 1e-12 );
      }
  }
}

TEST_CASE( "hard_eval: examples and opcode validation" )
{
  CHECK( hard_eval( gate_opcode( 14 ), true, true ) == false );  // NAND(1,1)
  CHECK( hard_eval( gate_opcode( 11 ), false, true ) == false ); // (A<=B)(0,1)
  CHECK( hard_eval( gate_opcode( 6 ), true, false ) == true );   // XOR(1,0)
  CHECK_THROWS_AS( gate_opcode( 16 ), invalid_argument );
  CHECK_THROWS_AS( gate_opcode( -1 ), invalid_argument );
}

TEST_CASE( "truth-table equivalence: all 64 opcode/input cases match the soft path" )
{
  matrix<double> a( 1, 1 ), b( 1, 1 );
  for ( int op = 0; op < 16; ++op )
  {
    auto p = oracle::one_hot_rows<double>( 1, op );
    auto c = project_to_basis( p );
    for ( int bb = 0; bb < 2; ++bb )
    {
      for ( int aa = 0; aa < 2; ++aa )
      {
        a( 0, 0 ) = aa;
        b( 0, 0 ) = bb;
        double const soft = soft_eval_basis( c, a, b )( 0, 0 );
        bool const hard = hard_eval( gate_opcode( op ), aa != 0, bb != 0 );
        REQUIRE( soft == static_cast<double>( hard ) );
        REQUIRE( soft_eval_full( p, a, b )( 0, 0 ) == static_cast<double>( hard ) );
      }
    }
  }
}

TEST_CASE( "backward_gate: saturated AND has unit input gradient" )
{
  std::size_t const width = 1;
  matrix<double> logits( width, 16 );
  logits( 0, 1 ) = 50.0; // p -> one-hot on AND, c -> [0,0,0,1]
  matrix<double> a( 1, width ), b( 1, width );
  a( 0, 0 ) = 0.3;
  b( 0, 0 ) = 1.0;
  gate_forward_cache<double> cache;
  matrix<double> out;
  gate_forward( logits, 1.0, a, b, gate_eval::basis_projection, cache, out );
  matrix<double> grad( 1, width, 1.0 );
  auto g = backward_gate( logits, 1.0, cache, grad );
  CHECK( g.da( 0, 0 ) == Catch::Approx( 1.0 ).margin( 1e-9 ) );
  CHECK( g.db( 0, 0 ) == Catch::Approx( 0.3 ).margin( 1e-9 ) );
  // saturated softmax: near-zero logit gradients
  for ( int i = 0; i < 16; ++i )
    CHECK( std::abs( g.dlogits( 0, i ) ) < 1e-9 );
}

TEST_CASE( "backward_gate: missing cache is an error" )
{
  matrix<double> logits( 1, 16 );
  gate_forward_cache<double> cache;
  matrix<double> grad( 1, 1, 1.0 );
  CHECK_THROWS_AS( backward_gate( logits, 1.0, cache, grad ), invalid_argument );
}

static void check_gate_gradients( gate_eval mode, u64 seed )
{
  std::size_t const width = 3;
  std::size_t const batch = 2;
  auto logits = oracle::random_logits<double>( width, 16, seed, 1.5 );
  auto a = oracle::random_unit<double>( batch, width, seed + 1 );
  auto b = oracle::random_unit<double>( batch, width, seed + 2 );
  auto grad = oracle::random_logits<double>( batch, width, seed + 3, 1.0 );
  double const tau_g = 1.0;

  auto objective = [&]() {
    gate_forward_cache<double> cache;
    matrix<double> out;
    gate_forward( logits, tau_g, a, b, mode, cache, out );
    double sum = 0;
    for ( std::size_t s = 0; s < batch; ++s )
      for ( std::size_t g = 0; g < width; ++g )
        sum += grad( s, g ) * out( s, g );
    return sum;
  };

  gate_forward_cache<double> cache;
  matrix<double> out;
  gate_forward( logits, tau_g, a, b, mode, cache, out );
  auto const analytic = backward_gate( logits, tau_g, cache, grad );

  for ( std::size_t g = 0; g < width; ++g )
    for ( int i = 0; i < 16; ++i )
    {
      double const fd = oracle::central_diff( &logits( g, i ), objective );
      REQUIRE( oracle::rel_err( analytic.dlogits( g, i ), fd ) < 1e-4 );
    }
  for ( std::size_t s = 0; s < batch; ++s )
    for ( std::size_t g = 0; g < width; ++g )
    {
      REQUIRE( oracle::rel_err( analytic.da( s, g ),
                                oracle::central_diff( &a( s, g ), objective ) ) < 1e-4 );
      REQUIRE( oracle::rel_err( analytic.db( s, g ),
                                oracle::central_diff( &b( s, g ), objective ) ) < 1e-4 );
    }
}

TEST_CASE( "backward_gate: finite differences agree on both evaluation routes" )
{
  for ( u64 seed : { 11u, 12u, 13u } )
  {
    check_gate_gradients( gate_eval::basis_projection, seed );
    check_gate_gradients( gate_eval::full_evaluation, seed );
  }
}
