/*!
  \file gates.hpp
  \brief The 16 two-input Boolean gates, their continuous relaxations, and gradients.

  Every gate is identified by an opcode in 0..15.  The opcode order is the
  canonical order of `gate_basis_coeffs` and is shared by the soft training
  path, the hardened circuit, the netlist format, and the Verilog emitter.

  A gate's relaxed output is a polynomial over the basis {1, A, B, A*B}:

      out = c1 + c2*A + c3*B + c4*A*B

  where c is either one fixed row of `gate_basis_coeffs` (hard gate) or a
  convex combination of rows weighted by a softmax over per-gate logits
  (soft gate).  Two evaluation strategies are provided:

    - basis projection: project the 16 probabilities to 4 coefficients once
      per gate, then evaluate the 4-term polynomial per sample;
    - full evaluation: evaluate all 16 relaxed gates per sample and take the
      probability-weighted sum.

  Both compute the same function; the basis route does a quarter of the
  per-sample work and is the default everywhere.  Full evaluation is kept as
  a first-class path for benchmarking.
*/

#pragma once

#include <array>
#include <cmath>
#include <string_view>

#include "common.hpp"
#include "matrix.hpp"

namespace lgn
{

inline constexpr int num_gate_ops = 16;

/*! Coefficients of {1, A, B, A*B} for each opcode. */
inline constexpr std::array<std::array<int, 4>, 16> gate_basis_coeffs = { {
    { 0, 0, 0, 0 },   // 0  false
    { 0, 0, 0, 1 },   // 1  a & b
    { 0, 1, 0, -1 },  // 2  a & ~b
    { 0, 1, 0, 0 },   // 3  a
    { 0, 0, 1, -1 },  // 4  ~a & b
    { 0, 0, 1, 0 },   // 5  b
    { 0, 1, 1, -2 },  // 6  a ^ b
    { 0, 1, 1, -1 },  // 7  a | b
    { 1, -1, -1, 1 }, // 8  ~(a | b)
    { 1, -1, -1, 2 }, // 9  ~(a ^ b)
    { 1, 0, -1, 0 },  // 10 ~b
    { 1, 0, -1, 1 },  // 11 a | ~b
    { 1, -1, 0, 0 },  // 12 ~a
    { 1, -1, 0, 1 },  // 13 ~a | b
    { 1, 0, 0, -1 },  // 14 ~(a & b)
    { 1, 0, 0, 0 },   // 15 true
} };

inline constexpr std::array<std::string_view, 16> gate_op_names = {
    "false", "and", "and_not_b", "a", "not_a_and_b", "b", "xor", "or",
    "nor", "xnor", "not_b", "a_or_not_b", "not_a", "implies", "nand", "true"
};

/*! \brief Opcode of one of the 16 two-input Boolean functions. */
class gate_opcode
{
public:
  constexpr gate_opcode() = default;

  explicit gate_opcode( int code ) : code_( static_cast<u8>( code ) )
  {
    require( code >= 0 && code < num_gate_ops, "gate opcode out of range" );
  }

  constexpr u8 value() const { return code_; }
  constexpr bool operator==( gate_opcode const& ) const = default;

private:
  u8 code_ = 0;
};

namespace detail
{

constexpr std::array<u8, 16> make_truth_masks()
{
  std::array<u8, 16> masks{};
  for ( int op = 0; op < 16; ++op )
  {
    auto const& c = gate_basis_coeffs[op];
    u8 m = 0;
    for ( int b = 0; b < 2; ++b )
    {
      for ( int a = 0; a < 2; ++a )
      {
        int const v = c[0] + c[1] * a + c[2] * b + c[3] * a * b;
        if ( v )
          m |= u8( 1 ) << ( a | ( b << 1 ) );
      }
    }
    masks[op] = m;
  }
  return masks;
}

} // namespace detail

/*! Truth table per opcode; bit (a | b<<1) holds the output for inputs (a, b). */
inline constexpr std::array<u8, 16> gate_truth_masks = detail::make_truth_masks();

/*! Exact Boolean evaluation of one gate. */
inline bool hard_eval( gate_opcode op, bool a, bool b )
{
  return ( gate_truth_masks[op.value()] >> ( int( a ) | ( int( b ) << 1 ) ) ) & 1u;
}

/*! \brief Per-gate softmax over the 16 opcode logits, scaled by temperature.
 *
 * Each row of `probs` lands on the 15-simplex.  Non-finite logits are a
 * parameter corruption and are rejected.
 */
template<class Real>
void gate_softmax( matrix<Real> const& logits, Real tau_g, matrix<Real>& probs )
{
  require( tau_g > Real( 0 ), "gate_softmax: tau_g must be positive" );
  require( logits.cols() == num_gate_ops, "gate_softmax: logits must have 16 columns" );
  probs.resize( logits.rows(), num_gate_ops );

  bool finite = true;
#pragma omp parallel for reduction( && : finite ) schedule( static )
  for ( std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>( logits.rows() ); ++g )
  {
    auto const in = logits.row( g );
    auto out = probs.row( g );
    bool row_ok = true;
    Real mx = in[0] * tau_g;
    for ( int i = 0; i < num_gate_ops; ++i )
    {
      // std::max never propagates NaN, so test each entry
      row_ok = row_ok && std::isfinite( static_cast<double>( in[i] ) );
      mx = std::max( mx, in[i] * tau_g );
    }
    if ( !row_ok )
    {
      finite = false;
      continue;
    }
    Real sum = 0;
    for ( int i = 0; i < num_gate_ops; ++i )
    {
      out[i] = std::exp( in[i] * tau_g - mx );
      sum += out[i];
    }
    Real const inv = Real( 1 ) / sum;
    for ( int i = 0; i < num_gate_ops; ++i )
      out[i] *= inv;
  }
  require( finite, "gate_softmax: non-finite logits" );
}

template<class Real>
matrix<Real> gate_softmax( matrix<Real> const& logits, Real tau_g )
{
  matrix<Real> probs;
  gate_softmax( logits, tau_g, probs );
  return probs;
}

/*! Project gate probabilities onto the {1, A, B, A*B} basis coefficients. */
template<class Real>
void project_to_basis( matrix<Real> const& probs, matrix<Real>& coeffs )
{
  require( probs.cols() == num_gate_ops, "project_to_basis: probs must have 16 columns" );
  coeffs.resize( probs.rows(), 4 );
#pragma omp parallel for schedule( static )
  for ( std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>( probs.rows() ); ++g )
  {
    auto const p = probs.row( g );
    auto c = coeffs.row( g );
    Real acc0 = 0, acc1 = 0, acc2 = 0, acc3 = 0;
    for ( int i = 0; i < num_gate_ops; ++i )
    {
      acc0 += p[i] * Real( gate_basis_coeffs[i][0] );
      acc1 += p[i] * Real( gate_basis_coeffs[i][1] );
      acc2 += p[i] * Real( gate_basis_coeffs[i][2] );
      acc3 += p[i] * Real( gate_basis_coeffs[i][3] );
    }
    c[0] = acc0;
    c[1] = acc1;
    c[2] = acc2;
    c[3] = acc3;
  }
}

template<class Real>
matrix<Real> project_to_basis( matrix<Real> const& probs )
{
  matrix<Real> coeffs;
  project_to_basis( probs, coeffs );
  return coeffs;
}

/*! Evaluate the 4-term polynomial per sample: out = c1 + c2*a + c3*b + c4*a*b. */
template<class Real>
void soft_eval_basis( matrix<Real> const& coeffs, matrix<Real> const& a, matrix<Real> const& b,
                      matrix<Real>& out )
{
  std::size_t const batch = a.rows();
  std::size_t const width = a.cols();
  require( coeffs.rows() == width && coeffs.cols() == 4, "soft_eval_basis: coeffs shape" );
  require( b.rows() == batch && b.cols() == width, "soft_eval_basis: operand shape" );
  out.resize( batch, width );
#pragma omp parallel for schedule( static )
  for ( std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>( batch ); ++s )
  {
    Real const* pa = a.data() + s * width;
    Real const* pb = b.data() + s * width;
    Real* po = out.data() + s * width;
    Real const* pc = coeffs.data();
    for ( std::size_t g = 0; g < width; ++g )
    {
      Real const x = pa[g];
      Real const y = pb[g];
      Real const* c = pc + 4 * g;
      po[g] = c[0] + c[1] * x + c[2] * y + c[3] * x * y;
    }
  }
}

template<class Real>
matrix<Real> soft_eval_basis( matrix<Real> const& coeffs, matrix<Real> const& a, matrix<Real> const& b )
{
  matrix<Real> out;
  soft_eval_basis( coeffs, a, b, out );
  return out;
}

/*! Evaluate all 16 relaxed gates per sample and mix by probability. */
template<class Real>
void soft_eval_full( matrix<Real> const& probs, matrix<Real> const& a, matrix<Real> const& b,
                     matrix<Real>& out )
{
  std::size_t const batch = a.rows();
  std::size_t const width = a.cols();
  require( probs.rows() == width && probs.cols() == num_gate_ops, "soft_eval_full: probs shape" );
  require( b.rows() == batch && b.cols() == width, "soft_eval_full: operand shape" );
  out.resize( batch, width );
#pragma omp parallel for schedule( static )
  for ( std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>( batch ); ++s )
  {
    Real const* pa = a.data() + s * width;
    Real const* pb = b.data() + s * width;
    Real* po = out.data() + s * width;
    for ( std::size_t g = 0; g < width; ++g )
    {
      Real const x = pa[g];
      Real const y = pb[g];
      auto const p = probs.row( g );
      Real acc = 0;
      for ( int i = 0; i < num_gate_ops; ++i )
      {
        auto const& w = gate_basis_coeffs[i];
        Real const gi = Real( w[0] ) + Real( w[1] ) * x + Real( w[2] ) * y + Real( w[3] ) * x * y;
        acc += p[i] * gi;
      }
      po[g] = acc;
    }
  }
}

template<class Real>
matrix<Real> soft_eval_full( matrix<Real> const& probs, matrix<Real> const& a, matrix<Real> const& b )
{
  matrix<Real> out;
  soft_eval_full( probs, a, b, out );
  return out;
}

enum class gate_eval : u8
{
  basis_projection,
  full_evaluation
};

/*! Forward tensors cached for the backward pass.  `a` and `b` stay caller-owned. */
template<class Real>
struct gate_forward_cache
{
  matrix<Real> probs;
  matrix<Real> coeffs; // only filled on the basis route
  matrix<Real> const* a = nullptr;
  matrix<Real> const* b = nullptr;
  gate_eval mode = gate_eval::basis_projection;
  bool valid = false;
};

/*! Soft forward for a whole gate column, caching what backward needs. */
template<class Real>
void gate_forward( matrix<Real> const& logits, Real tau_g, matrix<Real> const& a,
                   matrix<Real> const& b, gate_eval mode, gate_forward_cache<Real>& cache,
                   matrix<Real>& out )
{
  gate_softmax( logits, tau_g, cache.probs );
  cache.mode = mode;
  cache.a = &a;
  cache.b = &b;
  if ( mode == gate_eval::basis_projection )
  {
    project_to_basis( cache.probs, cache.coeffs );
    soft_eval_basis( cache.coeffs, a, b, out );
  }
  else
  {
    soft_eval_full( cache.probs, a, b, out );
  }
  cache.valid = true;
}

template<class Real>
struct gate_gradients
{
  matrix<Real> dlogits;
  matrix<Real> da;
  matrix<Real> db;
};

namespace detail
{

/*! Row-wise softmax Jacobian: dlogits = tau * p o (dp - <dp, p>). */
template<class Real>
void softmax_rows_backward( matrix<Real> const& probs, matrix<Real> const& dprobs, Real tau,
                            matrix<Real>& dlogits )
{
  dlogits.resize( probs.rows(), probs.cols() );
#pragma omp parallel for schedule( static )
  for ( std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>( probs.rows() ); ++g )
  {
    auto const p = probs.row( g );
    auto const dp = dprobs.row( g );
    auto dl = dlogits.row( g );
    Real dot = 0;
    for ( std::size_t i = 0; i < p.size(); ++i )
      dot += dp[i] * p[i];
    for ( std::size_t i = 0; i < p.size(); ++i )
      dl[i] = tau * p[i] * ( dp[i] - dot );
  }
}

} // namespace detail

/*! \brief Analytic gradients of the softmax -> projection -> polynomial chain.
 *
 * Yields d/dlogits, d/da and d/db of sum(grad_out * out).  The full-evaluation
 * route differentiates the 16-term mixture directly, mirroring its forward
 * cost, so the projection benchmark compares complete training steps.
 */
template<class Real>
gate_gradients<Real> backward_gate( matrix<Real> const& logits, Real tau_g,
                                    gate_forward_cache<Real> const& cache,
                                    matrix<Real> const& grad_out )
{
  require( cache.valid && cache.a && cache.b, "backward_gate: forward cache missing" );
  matrix<Real> const& a = *cache.a;
  matrix<Real> const& b = *cache.b;
  std::size_t const batch = a.rows();
  std::size_t const width = a.cols();
  require( grad_out.rows() == batch && grad_out.cols() == width, "backward_gate: grad shape" );

  gate_gradients<Real> g;
  g.da.resize( batch, width );
  g.db.resize( batch, width );
  matrix<Real> dprobs( width, num_gate_ops );

  if ( cache.mode == gate_eval::basis_projection )
  {
    matrix<Real> const& c = cache.coeffs;
#pragma omp parallel for schedule( static )
    for ( std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>( batch ); ++s )
    {
      Real const* pa = a.data() + s * width;
      Real const* pb = b.data() + s * width;
      Real const* pg = grad_out.data() + s * width;
      Real* pda = g.da.data() + s * width;
      Real* pdb = g.db.data() + s * width;
      Real const* pc = c.data();
      for ( std::size_t j = 0; j < width; ++j )
      {
        Real const* cj = pc + 4 * j;
        pda[j] = pg[j] * ( cj[1] + cj[3] * pb[j] );
        pdb[j] = pg[j] * ( cj[2] + cj[3] * pa[j] );
      }
    }
    // accumulate coefficient gradients over the batch, then pull back to probabilities
#pragma omp parallel for schedule( static )
    for ( std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>( width ); ++j )
    {
      Real d0 = 0, d1 = 0, d2 = 0, d3 = 0;
      for ( std::size_t s = 0; s < batch; ++s )
      {
        Real const go = grad_out( s, j );
        Real const x = a( s, j );
        Real const y = b( s, j );
        d0 += go;
        d1 += go * x;
        d2 += go * y;
        d3 += go * x * y;
      }
      auto dp = dprobs.row( j );
      for ( int i = 0; i < num_gate_ops; ++i )
      {
        auto const& w = gate_basis_coeffs[i];
        dp[i] = d0 * Real( w[0] ) + d1 * Real( w[1] ) + d2 * Real( w[2] ) + d3 * Real( w[3] );
      }
    }
  }
  else
  {
    matrix<Real> const& p = cache.probs;
#pragma omp parallel for schedule( static )
    for ( std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>( batch ); ++s )
    {
      Real const* pa = a.data() + s * width;
      Real const* pb = b.data() + s * width;
      Real const* pg = grad_out.data() + s * width;
      Real* pda = g.da.data() + s * width;
      Real* pdb = g.db.data() + s * width;
      for ( std::size_t j = 0; j < width; ++j )
      {
        auto const pr = p.row( j );
        Real const x = pa[j];
        Real const y = pb[j];
        Real sa = 0, sb = 0;
        for ( int i = 0; i < num_gate_ops; ++i )
        {
          auto const& w = gate_basis_coeffs[i];
          sa += pr[i] * ( Real( w[1] ) + Real( w[3] ) * y );
          sb += pr[i] * ( Real( w[2] ) + Real( w[3] ) * x );
        }
        pda[j] = pg[j] * sa;
        pdb[j] = pg[j] * sb;
      }
    }
#pragma omp parallel for schedule( static )
    for ( std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>( width ); ++j )
    {
      auto dp = dprobs.row( j );
      for ( int i = 0; i < num_gate_ops; ++i )
        dp[i] = 0;
      for ( std::size_t s = 0; s < batch; ++s )
      {
        Real const go = grad_out( s, j );
        Real const x = a( s, j );
        Real const y = b( s, j );
        for ( int i = 0; i < num_gate_ops; ++i )
        {
          auto const& w = gate_basis_coeffs[i];
          Real const gi = Real( w[0] ) + Real( w[1] ) * x + Real( w[2] ) * y + Real( w[3] ) * x * y;
          dp[i] += go * gi;
        }
      }
    }
  }

  detail::softmax_rows_backward( cache.probs, dprobs, tau_g, g.dlogits );
  ( void )logits;
  return g;
}

} // namespace lgn
