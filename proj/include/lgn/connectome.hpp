/*!
  \file connectome.hpp
  \brief Wiring between gate layers: fixed random, Top-K sparse learnable, and dense learnable.

  Every gate has exactly two input slots.  A connectome decides which
  previous-layer outputs (or input bits, for the first layer) feed each slot:

    - fixed:      one random index per slot, frozen at init;
    - top_k:      K random candidate indices per slot; training softmax-mixes
                  the candidate activations per slot;
    - learnable:  every previous output is a candidate; selection weights form
                  a dense width x in_dim softmax per slot, so the forward pass
                  is a plain matrix product.

  Hardening replaces each slot's softmax by its argmax, leaving two wires per
  gate regardless of strategy.

  Layouts: top_k candidates and logits are gate-major, [(gate*2 + slot)*k + j].
  Learnable logits are slot-major, [slot*width*in_dim + gate*in_dim + i], so a
  slot's selection block is one contiguous matrix.
*/

#pragma once

#include <limits>
#include <vector>

#include <Eigen/Core>

#include "common.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace lgn
{

enum class wiring : u8
{
  fixed,
  top_k,
  learnable
};

inline std::string_view wiring_name( wiring w )
{
  switch ( w )
  {
  case wiring::fixed:
    return "fixed";
  case wiring::top_k:
    return "top_k";
  default:
    return "learnable";
  }
}

template<class Real>
struct connectome_spec
{
  wiring strategy = wiring::fixed;
  i32 in_dim = 0;
  i32 width = 0;
  i32 k = 0; // top_k only
  Real tau_c = 1;
  std::vector<i32> candidates;
  std::vector<Real> logits;

  std::size_t num_logits() const { return logits.size(); }

  Real* slot_logits( int slot )
  {
    return logits.data() + static_cast<std::size_t>( slot ) * width * in_dim;
  }
  Real const* slot_logits( int slot ) const
  {
    return logits.data() + static_cast<std::size_t>( slot ) * width * in_dim;
  }
};

/*! Structural invariants, rechecked when specs arrive from disk. */
template<class Real>
void validate( connectome_spec<Real> const& spec )
{
  require( spec.in_dim >= 1 && spec.width >= 1, "connectome: bad dimensions" );
  for ( i32 idx : spec.candidates )
    require( idx >= 0 && idx < spec.in_dim, "connectome: candidate index out of range" );
  switch ( spec.strategy )
  {
  case wiring::fixed:
    require( spec.candidates.size() == static_cast<std::size_t>( spec.width ) * 2,
             "connectome: fixed candidate table shape" );
    require( spec.logits.empty(), "connectome: fixed wiring carries no logits" );
    break;
  case wiring::top_k:
  {
    require( spec.k >= 2 && spec.k <= spec.in_dim, "connectome: k out of range" );
    std::size_t const n = static_cast<std::size_t>( spec.width ) * 2 * spec.k;
    require( spec.candidates.size() == n && spec.logits.size() == n,
             "connectome: top_k table shape" );
    for ( i32 g = 0; g < spec.width; ++g )
    {
      for ( int slot = 0; slot < 2; ++slot )
      {
        i32 const* c = spec.candidates.data() + ( static_cast<std::size_t>( g ) * 2 + slot ) * spec.k;
        for ( int i = 0; i < spec.k; ++i )
          for ( int j = i + 1; j < spec.k; ++j )
            require( c[i] != c[j], "connectome: duplicate candidate in slot" );
      }
    }
    break;
  }
  case wiring::learnable:
    require( spec.candidates.empty(), "connectome: learnable wiring has implicit candidates" );
    require( spec.logits.size() == static_cast<std::size_t>( spec.width ) * 2 * spec.in_dim,
             "connectome: learnable logit shape" );
    break;
  }
}

/*! \brief Seeded construction of a wiring spec.
 *
 * Candidate indices are uniform without replacement per slot; the two slots
 * draw independently.  Connection logits start i.i.d. standard normal.
 */
template<class Real>
connectome_spec<Real> init_connectome( wiring strategy, i32 in_dim, i32 width, i32 k, u64 seed )
{
  require( in_dim >= 1, "init_connectome: in_dim must be positive" );
  require( width >= 1, "init_connectome: width must be positive" );
  connectome_spec<Real> spec;
  spec.strategy = strategy;
  spec.in_dim = in_dim;
  spec.width = width;

  rng wires( seed, stream::connectome_wiring );
  rng weights( seed, stream::connectome_logits );

  switch ( strategy )
  {
  case wiring::fixed:
    spec.candidates.resize( static_cast<std::size_t>( width ) * 2 );
    for ( auto& c : spec.candidates )
      c = static_cast<i32>( wires.below( in_dim ) );
    break;
  case wiring::top_k:
  {
    require( k >= 2, "init_connectome: k must be at least 2" );
    require( k <= in_dim, "init_connectome: k exceeds in_dim" );
    spec.k = k;
    std::size_t const n = static_cast<std::size_t>( width ) * 2 * k;
    spec.candidates.resize( n );
    for ( i32 g = 0; g < width; ++g )
    {
      for ( int slot = 0; slot < 2; ++slot )
      {
        auto const picked = wires.sample_distinct( in_dim, k );
        std::copy( picked.begin(), picked.end(),
                   spec.candidates.begin() + ( static_cast<std::size_t>( g ) * 2 + slot ) * k );
      }
    }
    spec.logits.resize( n );
    for ( auto& w : spec.logits )
      w = static_cast<Real>( weights.normal() );
    break;
  }
  case wiring::learnable:
    spec.logits.resize( static_cast<std::size_t>( width ) * 2 * in_dim );
    for ( auto& w : spec.logits )
      w = static_cast<Real>( weights.normal() );
    break;
  }
  return spec;
}

template<class Real>
struct select_cache
{
  matrix<Real> a; // batch x width selected activations, slot 0
  matrix<Real> b; // slot 1
  matrix<Real> weights_a; // softmaxed selection weights (empty for fixed wiring)
  matrix<Real> weights_b;
  bool valid = false;
};

namespace detail
{

template<class Real>
void softmax_span( Real const* in, std::size_t n, Real tau, Real* out )
{
  Real mx = in[0] * tau;
  for ( std::size_t i = 1; i < n; ++i )
    mx = std::max( mx, in[i] * tau );
  Real sum = 0;
  for ( std::size_t i = 0; i < n; ++i )
  {
    out[i] = std::exp( in[i] * tau - mx );
    sum += out[i];
  }
  Real const inv = Real( 1 ) / sum;
  for ( std::size_t i = 0; i < n; ++i )
    out[i] *= inv;
}

template<class Real>
using emap = Eigen::Map<Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template<class Real>
using cemap = Eigen::Map<Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> const>;

} // namespace detail

/*! \brief Soft input selection: per slot, a convex mix of candidate activations.
 *
 * Fixed wiring gathers directly.  The learnable strategy runs as one dense
 * product per slot; the blocked kernel is what makes dense models train fast.
 */
template<class Real>
void soft_select_inputs( connectome_spec<Real> const& spec, matrix<Real> const& prev,
                         select_cache<Real>& cache )
{
  std::size_t const batch = prev.rows();
  std::size_t const width = spec.width;
  require( prev.cols() == static_cast<std::size_t>( spec.in_dim ), "soft_select_inputs: prev width" );
  cache.a.resize( batch, width );
  cache.b.resize( batch, width );

  switch ( spec.strategy )
  {
  case wiring::fixed:
  {
#pragma omp parallel for schedule( static )
    for ( std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>( batch ); ++s )
    {
      Real const* src = prev.data() + s * spec.in_dim;
      Real* pa = cache.a.data() + s * width;
      Real* pb = cache.b.data() + s * width;
      for ( std::size_t g = 0; g < width; ++g )
      {
        pa[g] = src[spec.candidates[2 * g]];
        pb[g] = src[spec.candidates[2 * g + 1]];
      }
    }
    break;
  }
  case wiring::top_k:
  {
    std::size_t const k = spec.k;
    cache.weights_a.resize( width, k );
    cache.weights_b.resize( width, k );
#pragma omp parallel for schedule( static )
    for ( std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>( width ); ++g )
    {
      detail::softmax_span( spec.logits.data() + ( 2 * g ) * k, k, spec.tau_c,
                            cache.weights_a.data() + g * k );
      detail::softmax_span( spec.logits.data() + ( 2 * g + 1 ) * k, k, spec.tau_c,
                            cache.weights_b.data() + g * k );
    }
#pragma omp parallel for schedule( static )
    for ( std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>( batch ); ++s )
    {
      Real const* src = prev.data() + s * spec.in_dim;
      Real* pa = cache.a.data() + s * width;
      Real* pb = cache.b.data() + s * width;
      for ( std::size_t g = 0; g < width; ++g )
      {
        i32 const* ca = spec.candidates.data() + ( 2 * g ) * k;
        i32 const* cb = spec.candidates.data() + ( 2 * g + 1 ) * k;
        Real const* wa = cache.weights_a.data() + g * k;
        Real const* wb = cache.weights_b.data() + g * k;
        Real va = 0, vb = 0;
        for ( std::size_t j = 0; j < k; ++j )
        {
          va += wa[j] * src[ca[j]];
          vb += wb[j] * src[cb[j]];
        }
        pa[g] = va;
        pb[g] = vb;
      }
    }
    break;
  }
  case wiring::learnable:
  {
    cache.weights_a.resize( width, spec.in_dim );
    cache.weights_b.resize( width, spec.in_dim );
#pragma omp parallel for schedule( static )
    for ( std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>( width ); ++g )
    {
      detail::softmax_span( spec.slot_logits( 0 ) + g * spec.in_dim, spec.in_dim, spec.tau_c,
                            cache.weights_a.data() + g * spec.in_dim );
      detail::softmax_span( spec.slot_logits( 1 ) + g * spec.in_dim, spec.in_dim, spec.tau_c,
                            cache.weights_b.data() + g * spec.in_dim );
    }
    detail::cemap<Real> P( prev.data(), batch, spec.in_dim );
    detail::cemap<Real> Sa( cache.weights_a.data(), width, spec.in_dim );
    detail::cemap<Real> Sb( cache.weights_b.data(), width, spec.in_dim );
    detail::emap<Real> A( cache.a.data(), batch, width );
    detail::emap<Real> B( cache.b.data(), batch, width );
    A.noalias() = P * Sa.transpose();
    B.noalias() = P * Sb.transpose();
    break;
  }
  }
  cache.valid = true;
}

/*! \brief Gradients of soft selection w.r.t. connection logits and previous activations.
 *
 * `dlogits` must match spec.logits in size (and is ignored for fixed wiring).
 * Pass `dprev = nullptr` to skip the input gradient (layer 0 has none).
 */
template<class Real>
void backward_select( connectome_spec<Real> const& spec, select_cache<Real> const& cache,
                      matrix<Real> const& prev, matrix<Real> const& grad_a,
                      matrix<Real> const& grad_b, std::vector<Real>& dlogits,
                      matrix<Real>* dprev )
{
  require( cache.valid, "backward_select: forward cache missing" );
  std::size_t const batch = prev.rows();
  std::size_t const width = spec.width;
  if ( dprev )
    dprev->resize( batch, spec.in_dim );

  switch ( spec.strategy )
  {
  case wiring::fixed:
  {
    if ( dprev )
    {
#pragma omp parallel for schedule( static )
      for ( std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>( batch ); ++s )
      {
        Real* dst = dprev->data() + s * spec.in_dim;
        Real const* ga = grad_a.data() + s * width;
        Real const* gb = grad_b.data() + s * width;
        for ( std::size_t g = 0; g < width; ++g )
        {
          dst[spec.candidates[2 * g]] += ga[g];
          dst[spec.candidates[2 * g + 1]] += gb[g];
        }
      }
    }
    break;
  }
  case wiring::top_k:
  {
    std::size_t const k = spec.k;
    dlogits.assign( spec.logits.size(), Real( 0 ) );
#pragma omp parallel for schedule( static )
    for ( std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>( width ); ++g )
    {
      for ( int slot = 0; slot < 2; ++slot )
      {
        matrix<Real> const& grad = slot == 0 ? grad_a : grad_b;
        matrix<Real> const& wsel = slot == 0 ? cache.weights_a : cache.weights_b;
        i32 const* cand = spec.candidates.data() + ( 2 * g + slot ) * k;
        Real const* w = wsel.data() + g * k;
        Real* dl = dlogits.data() + ( 2 * g + slot ) * k;
        // dw_j = sum_s grad * candidate_j, then the softmax Jacobian per slot
        for ( std::size_t s = 0; s < batch; ++s )
        {
          Real const go = grad( s, g );
          Real const* src = prev.data() + s * spec.in_dim;
          for ( std::size_t j = 0; j < k; ++j )
            dl[j] += go * src[cand[j]];
        }
        Real dot = 0;
        for ( std::size_t j = 0; j < k; ++j )
          dot += w[j] * dl[j];
        for ( std::size_t j = 0; j < k; ++j )
          dl[j] = spec.tau_c * w[j] * ( dl[j] - dot );
      }
    }
    if ( dprev )
    {
#pragma omp parallel for schedule( static )
      for ( std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>( batch ); ++s )
      {
        Real* dst = dprev->data() + s * spec.in_dim;
        Real const* ga = grad_a.data() + s * width;
        Real const* gb = grad_b.data() + s * width;
        for ( std::size_t g = 0; g < width; ++g )
        {
          i32 const* ca = spec.candidates.data() + ( 2 * g ) * k;
          i32 const* cb = spec.candidates.data() + ( 2 * g + 1 ) * k;
          Real const* wa = cache.weights_a.data() + g * k;
          Real const* wb = cache.weights_b.data() + g * k;
          for ( std::size_t j = 0; j < k; ++j )
          {
            dst[ca[j]] += ga[g] * wa[j];
            dst[cb[j]] += gb[g] * wb[j];
          }
        }
      }
    }
    break;
  }
  case wiring::learnable:
  {
    dlogits.resize( spec.logits.size() );
    detail::cemap<Real> P( prev.data(), batch, spec.in_dim );
    for ( int slot = 0; slot < 2; ++slot )
    {
      matrix<Real> const& grad = slot == 0 ? grad_a : grad_b;
      matrix<Real> const& wsel = slot == 0 ? cache.weights_a : cache.weights_b;
      detail::cemap<Real> G( grad.data(), batch, width );
      detail::cemap<Real> S( wsel.data(), width, spec.in_dim );
      Real* dl_base = dlogits.data() + static_cast<std::size_t>( slot ) * width * spec.in_dim;
      detail::emap<Real> dS( dl_base, width, spec.in_dim );
      dS.noalias() = G.transpose() * P;
#pragma omp parallel for schedule( static )
      for ( std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>( width ); ++g )
      {
        Real const* w = wsel.data() + g * spec.in_dim;
        Real* dl = dl_base + g * spec.in_dim;
        Real dot = 0;
        for ( i32 i = 0; i < spec.in_dim; ++i )
          dot += w[i] * dl[i];
        for ( i32 i = 0; i < spec.in_dim; ++i )
          dl[i] = spec.tau_c * w[i] * ( dl[i] - dot );
      }
      if ( dprev )
      {
        detail::emap<Real> dP( dprev->data(), batch, spec.in_dim );
        if ( slot == 0 )
          dP.noalias() = G * S;
        else
          dP.noalias() += G * S;
      }
    }
    break;
  }
  }
}

/*! \brief Collapse soft selection to two wires per gate (argmax per slot).
 *
 * Ties go to the lowest candidate index.  Fixed wiring returns its table.
 */
template<class Real>
matrix<i32> harden( connectome_spec<Real> const& spec )
{
  matrix<i32> table( spec.width, 2 );
  switch ( spec.strategy )
  {
  case wiring::fixed:
    for ( i32 g = 0; g < spec.width; ++g )
    {
      table( g, 0 ) = spec.candidates[2 * g];
      table( g, 1 ) = spec.candidates[2 * g + 1];
    }
    break;
  case wiring::top_k:
    for ( i32 g = 0; g < spec.width; ++g )
    {
      for ( int slot = 0; slot < 2; ++slot )
      {
        std::size_t const base = ( static_cast<std::size_t>( g ) * 2 + slot ) * spec.k;
        Real best = spec.logits[base];
        i32 best_cand = spec.candidates[base];
        for ( i32 j = 1; j < spec.k; ++j )
        {
          Real const v = spec.logits[base + j];
          i32 const c = spec.candidates[base + j];
          if ( v > best || ( v == best && c < best_cand ) )
          {
            best = v;
            best_cand = c;
          }
        }
        table( g, slot ) = best_cand;
      }
    }
    break;
  case wiring::learnable:
    for ( i32 g = 0; g < spec.width; ++g )
    {
      for ( int slot = 0; slot < 2; ++slot )
      {
        Real const* w = spec.slot_logits( slot ) + static_cast<std::size_t>( g ) * spec.in_dim;
        i32 best = 0;
        for ( i32 i = 1; i < spec.in_dim; ++i )
          if ( w[i] > w[best] )
            best = i;
        table( g, slot ) = best;
      }
    }
    break;
  }
  return table;
}

struct path_count
{
  u64 value;
  bool saturated;
};

/*! Upper bound K^N on distinct input paths through N stacked Top-K layers. */
inline path_count path_count_upper_bound( u64 k, u64 n )
{
  require( k >= 1 && n >= 1, "path_count_upper_bound: k and n must be at least 1" );
  path_count r{ 1, false };
  for ( u64 i = 0; i < n; ++i )
  {
    if ( r.value > std::numeric_limits<u64>::max() / k )
      return { std::numeric_limits<u64>::max(), true };
    r.value *= k;
  }
  return r;
}

} // namespace lgn
