/*!
  \file network.hpp
  \brief N-layer soft logic gate network with group-count classification head.

  The last layer's gates are split into `num_classes` contiguous groups.  A
  sample's logit for class c is the sum of soft activations in group c divided
  by the temperature tau; training minimizes softmax cross-entropy over these
  logits.  After hardening, the same head becomes a popcount majority vote.
*/

#pragma once

#include <cmath>
#include <algorithm>
#include <utility>
#include <vector>

#include "common.hpp"
#include "connectome.hpp"
#include "gates.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace lgn
{

template<class Real>
struct network_config
{
  i32 input_dim = 0;
  i32 num_classes = 0;
  std::vector<i32> layer_widths;
  wiring strategy = wiring::fixed;
  i32 k = 0; // top_k candidate count
  Real tau = 1;
  Real tau_g = 1;
  Real tau_c = 1;
  gate_eval mode = gate_eval::basis_projection;

  i32 total_gates() const
  {
    i32 n = 0;
    for ( i32 w : layer_widths )
      n += w;
    return n;
  }
};

/*! Contiguous [lo, hi) gate ranges, one per class. */
inline std::vector<std::pair<i32, i32>> group_partition( i32 width, i32 num_classes )
{
  require( num_classes >= 1 && width >= num_classes, "group_partition: bad arguments" );
  require( width % num_classes == 0, "group_partition: width not divisible by class count" );
  i32 const per = width / num_classes;
  std::vector<std::pair<i32, i32>> groups( num_classes );
  for ( i32 c = 0; c < num_classes; ++c )
    groups[c] = { c * per, ( c + 1 ) * per };
  return groups;
}

template<class Real>
struct gate_layer
{
  matrix<Real> gate_logits; // width x 16
  connectome_spec<Real> conn;
};

template<class Real>
struct layer_cache
{
  select_cache<Real> sel;
  gate_forward_cache<Real> gates;
  matrix<Real> out;
};

/*! Per-batch forward state, reusable across batches to keep buffers warm. */
template<class Real>
struct forward_pass
{
  std::vector<layer_cache<Real>> layers;
  matrix<Real> class_logits; // batch x num_classes
};

/*! Parameter gradients, shaped exactly like the parameters. */
template<class Real>
struct network_gradients
{
  std::vector<matrix<Real>> gate_logits;
  std::vector<std::vector<Real>> conn_logits;
};

/*! Flat view of one parameter tensor and its gradient. */
template<class Real>
struct param_view
{
  Real* value;
  Real* grad;
  std::size_t size;
};

template<class Real>
class logic_network
{
public:
  logic_network() = default;

  logic_network( network_config<Real> cfg, u64 seed ) : cfg_( std::move( cfg ) ), seed_( seed )
  {
    require( !cfg_.layer_widths.empty(), "logic_network: needs at least one layer" );
    require( cfg_.input_dim >= 1, "logic_network: input_dim must be positive" );
    require( cfg_.tau > Real( 0 ), "logic_network: tau must be positive" );
    groups_ = group_partition( cfg_.layer_widths.back(), cfg_.num_classes );

    i32 in_dim = cfg_.input_dim;
    for ( std::size_t l = 0; l < cfg_.layer_widths.size(); ++l )
    {
      i32 const width = cfg_.layer_widths[l];
      gate_layer<Real> layer;
      layer.conn = init_connectome<Real>( cfg_.strategy, in_dim, width, cfg_.k,
                                          derive_seed( seed, static_cast<u64>( stream::connectome_wiring ), l ) );
      layer.conn.tau_c = cfg_.tau_c;
      layer.gate_logits.resize( width, num_gate_ops );
      rng gates_rng( seed, stream::gate_logits, l );
      for ( i32 g = 0; g < width; ++g )
        for ( int i = 0; i < num_gate_ops; ++i )
          layer.gate_logits( g, i ) = static_cast<Real>( gates_rng.normal() );
      layers_.push_back( std::move( layer ) );
      in_dim = width;
    }
  }

  /*! Assemble from existing parameters (checkpoint load); no random draws. */
  logic_network( network_config<Real> cfg, u64 seed, std::vector<gate_layer<Real>> layers )
      : cfg_( std::move( cfg ) ), seed_( seed ), layers_( std::move( layers ) )
  {
    require( layers_.size() == cfg_.layer_widths.size(), "logic_network: layer count mismatch" );
    i32 in_dim = cfg_.input_dim;
    for ( std::size_t l = 0; l < layers_.size(); ++l )
    {
      require( layers_[l].conn.in_dim == in_dim && layers_[l].conn.width == cfg_.layer_widths[l],
               "logic_network: connectome shape mismatch" );
      validate( layers_[l].conn );
      require( layers_[l].gate_logits.rows() == static_cast<std::size_t>( cfg_.layer_widths[l] ) &&
                   layers_[l].gate_logits.cols() == num_gate_ops,
               "logic_network: gate logit shape mismatch" );
      in_dim = cfg_.layer_widths[l];
    }
    groups_ = group_partition( cfg_.layer_widths.back(), cfg_.num_classes );
  }

  network_config<Real> const& config() const { return cfg_; }
  u64 seed() const { return seed_; }
  std::vector<gate_layer<Real>>& layers() { return layers_; }
  std::vector<gate_layer<Real>> const& layers() const { return layers_; }
  std::vector<std::pair<i32, i32>> const& groups() const { return groups_; }

  /*! Soft forward through every layer and the group head. */
  void forward( matrix<Real> const& x, forward_pass<Real>& pass ) const
  {
    require( x.cols() == static_cast<std::size_t>( cfg_.input_dim ), "forward: input dimension" );
    pass.layers.resize( layers_.size() );
    matrix<Real> const* cur = &x;
    for ( std::size_t l = 0; l < layers_.size(); ++l )
    {
      auto& lc = pass.layers[l];
      soft_select_inputs( layers_[l].conn, *cur, lc.sel );
      gate_forward( layers_[l].gate_logits, cfg_.tau_g, lc.sel.a, lc.sel.b, cfg_.mode, lc.gates,
                    lc.out );
      cur = &lc.out;
    }

    std::size_t const batch = x.rows();
    i32 const last_width = cfg_.layer_widths.back();
    pass.class_logits.resize( batch, cfg_.num_classes );
    matrix<Real> const& last = pass.layers.back().out;
    Real const inv_tau = Real( 1 ) / cfg_.tau;
#pragma omp parallel for schedule( static )
    for ( std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>( batch ); ++s )
    {
      Real const* act = last.data() + s * last_width;
      Real* out = pass.class_logits.data() + s * cfg_.num_classes;
      for ( i32 c = 0; c < cfg_.num_classes; ++c )
      {
        Real sum = 0;
        for ( i32 g = groups_[c].first; g < groups_[c].second; ++g )
          sum += act[g];
        out[c] = sum * inv_tau;
      }
    }
  }

  /*! Mean softmax cross-entropy and gradients for every parameter.
   *
   * `x` must be the batch the pass was run on.  Gradient buffers are resized
   * as needed and reused across calls.
   */
  Real loss_and_backward( matrix<Real> const& x, std::vector<i32> const& labels,
                          forward_pass<Real> const& pass, network_gradients<Real>& grads ) const
  {
    std::size_t const batch = labels.size();
    require( pass.class_logits.rows() == batch, "loss_and_backward: stale forward pass" );
    for ( i32 label : labels )
      require( label >= 0 && label < cfg_.num_classes, "loss_and_backward: label range" );
    init_gradient_shapes( grads );

    matrix<Real> dlogits( batch, cfg_.num_classes );
    double loss_sum = 0;
#pragma omp parallel for reduction( + : loss_sum ) schedule( static )
    for ( std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>( batch ); ++s )
    {
      Real const* z = pass.class_logits.data() + s * cfg_.num_classes;
      Real* dz = dlogits.data() + s * cfg_.num_classes;
      Real mx = z[0];
      for ( i32 c = 1; c < cfg_.num_classes; ++c )
        mx = std::max( mx, z[c] );
      Real sum = 0;
      for ( i32 c = 0; c < cfg_.num_classes; ++c )
        sum += std::exp( z[c] - mx );
      Real const log_z = std::log( sum ) + mx;
      loss_sum += static_cast<double>( log_z - z[labels[s]] );
      Real const inv_batch = Real( 1 ) / Real( batch );
      for ( i32 c = 0; c < cfg_.num_classes; ++c )
      {
        Real const p = std::exp( z[c] - log_z );
        dz[c] = ( p - ( c == labels[s] ? Real( 1 ) : Real( 0 ) ) ) * inv_batch;
      }
    }

    // head: spread the class-logit gradient over each group, undoing the tau scale
    i32 const last_width = cfg_.layer_widths.back();
    matrix<Real> dact( batch, last_width );
    Real const inv_tau = Real( 1 ) / cfg_.tau;
#pragma omp parallel for schedule( static )
    for ( std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>( batch ); ++s )
    {
      Real const* dz = dlogits.data() + s * cfg_.num_classes;
      Real* da = dact.data() + s * last_width;
      for ( i32 c = 0; c < cfg_.num_classes; ++c )
      {
        Real const v = dz[c] * inv_tau;
        for ( i32 g = groups_[c].first; g < groups_[c].second; ++g )
          da[g] = v;
      }
    }

    for ( std::size_t l = layers_.size(); l-- > 0; )
    {
      auto const& lc = pass.layers[l];
      auto gg = backward_gate( layers_[l].gate_logits, cfg_.tau_g, lc.gates, dact );
      // copy into the pre-shaped buffer: optimizer views stay valid across batches
      std::copy( gg.dlogits.data(), gg.dlogits.data() + gg.dlogits.size(),
                 grads.gate_logits[l].data() );
      matrix<Real> const& prev = l == 0 ? x : pass.layers[l - 1].out;
      matrix<Real> dprev;
      backward_select( layers_[l].conn, lc.sel, prev, gg.da, gg.db, grads.conn_logits[l],
                       l == 0 ? nullptr : &dprev );
      dact = std::move( dprev );
    }
    return static_cast<Real>( loss_sum / static_cast<double>( batch ) );
  }

  /*! Flat parameter/gradient views for the optimizer, in a fixed order. */
  std::vector<param_view<Real>> collect_params( network_gradients<Real>& grads )
  {
    init_gradient_shapes( grads );
    std::vector<param_view<Real>> views;
    for ( std::size_t l = 0; l < layers_.size(); ++l )
    {
      views.push_back( { layers_[l].gate_logits.data(), grads.gate_logits[l].data(),
                         layers_[l].gate_logits.size() } );
      if ( !layers_[l].conn.logits.empty() )
        views.push_back( { layers_[l].conn.logits.data(), grads.conn_logits[l].data(),
                           layers_[l].conn.logits.size() } );
    }
    return views;
  }

  void init_gradient_shapes( network_gradients<Real>& grads ) const
  {
    grads.gate_logits.resize( layers_.size() );
    grads.conn_logits.resize( layers_.size() );
    for ( std::size_t l = 0; l < layers_.size(); ++l )
    {
      if ( grads.gate_logits[l].rows() != layers_[l].gate_logits.rows() )
        grads.gate_logits[l].resize( layers_[l].gate_logits.rows(), num_gate_ops );
      grads.conn_logits[l].resize( layers_[l].conn.logits.size() );
    }
  }

  std::size_t num_params() const
  {
    std::size_t n = 0;
    for ( auto const& layer : layers_ )
      n += layer.gate_logits.size() + layer.conn.logits.size();
    return n;
  }

private:
  network_config<Real> cfg_;
  u64 seed_ = 0;
  std::vector<gate_layer<Real>> layers_;
  std::vector<std::pair<i32, i32>> groups_;
};

} // namespace lgn
