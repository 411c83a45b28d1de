/*!
  \file trainer.hpp
  \brief Mini-batch training loop with seeded shuffling and validation.
*/

#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "adam.hpp"
#include "common.hpp"
#include "data.hpp"
#include "network.hpp"
#include "rng.hpp"

namespace lgn
{

template<class Real>
struct train_config
{
  Real lr = Real( 0.075 );
  i32 batch_size = 256;
  i32 epochs = 200;
  Real beta1 = Real( 0.9 );
  Real beta2 = Real( 0.999 );
  Real eps = Real( 1e-8 );
  u64 seed = 1;
  i32 eval_every = 1;
  bool progress = false; // `epoch=<e> loss=<l> val_acc=<a>` lines on stdout
};

struct epoch_stats
{
  i32 epoch;
  double loss;
  double val_acc; // -1 when validation was skipped this epoch
};

/*! Training outcome.  `minutes` covers forward/backward/update/validation
 *  only; dataset loading and augmentation happen before the clock starts. */
struct train_report
{
  std::vector<epoch_stats> epochs;
  double minutes = 0;
  double binarized_test_acc = -1; // filled by callers that run the hardened model
  u64 seed = 0;
};

/*! Fraction of argmax-correct soft predictions; ties resolve to the lowest class. */
template<class Real>
double evaluate_soft( logic_network<Real> const& net, labeled_bits const& split,
                      i32 batch_size = 1024 )
{
  require( split.size() > 0, "evaluate_soft: empty split" );
  std::size_t const n = split.size();
  std::size_t const d = split.inputs.cols();
  forward_pass<Real> pass;
  matrix<Real> x;
  std::size_t correct = 0;
  for ( std::size_t start = 0; start < n; start += batch_size )
  {
    std::size_t const bs = std::min<std::size_t>( batch_size, n - start );
    x.resize( bs, d );
    for ( std::size_t s = 0; s < bs; ++s )
      unpack_bits_row( split.inputs, start + s, x.data() + s * d );
    net.forward( x, pass );
    for ( std::size_t s = 0; s < bs; ++s )
    {
      auto const z = pass.class_logits.row( s );
      i32 best = 0;
      for ( i32 c = 1; c < static_cast<i32>( z.size() ); ++c )
        if ( z[c] > z[best] )
          best = c;
      if ( best == split.labels[start + s] )
        ++correct;
    }
  }
  return static_cast<double>( correct ) / static_cast<double>( n );
}

/*! \brief Seeded epochs of shuffled mini-batches with Adam updates.
 *
 * Fully deterministic: (seed, config, data) decide the trained parameters.
 * Throws on divergence, naming the epoch.
 */
template<class Real>
train_report train( logic_network<Real>& net, labeled_bits const& train_split,
                    labeled_bits const& val_split, train_config<Real> const& cfg )
{
  require( cfg.batch_size >= 1, "train: batch_size must be positive" );
  require( cfg.epochs >= 0, "train: epochs must be non-negative" );
  require( train_split.size() > 0, "train: empty training split" );

  network_gradients<Real> grads;
  auto views = net.collect_params( grads );
  adam<Real> opt( views, { cfg.lr, cfg.beta1, cfg.beta2, cfg.eps } );

  std::size_t const n = train_split.size();
  std::size_t const d = train_split.inputs.cols();
  std::vector<u32> order( n );
  std::iota( order.begin(), order.end(), 0u );

  forward_pass<Real> pass;
  matrix<Real> x;
  std::vector<i32> labels;

  train_report report;
  report.seed = cfg.seed;

  auto const t0 = std::chrono::steady_clock::now();
  for ( i32 epoch = 1; epoch <= cfg.epochs; ++epoch )
  {
    rng shuffle_rng( cfg.seed, stream::shuffle, static_cast<u64>( epoch ) );
    shuffle_rng.shuffle( order );

    double loss_sum = 0;
    for ( std::size_t start = 0; start < n; start += cfg.batch_size )
    {
      std::size_t const bs = std::min<std::size_t>( cfg.batch_size, n - start );
      x.resize( bs, d );
      labels.resize( bs );
      for ( std::size_t s = 0; s < bs; ++s )
      {
        u32 const idx = order[start + s];
        unpack_bits_row( train_split.inputs, idx, x.data() + s * d );
        labels[s] = train_split.labels[idx];
      }
      net.forward( x, pass );
      Real const loss = net.loss_and_backward( x, labels, pass, grads );
      if ( !std::isfinite( static_cast<double>( loss ) ) )
        throw error( "train: loss diverged at epoch " + std::to_string( epoch ) );
      loss_sum += static_cast<double>( loss ) * bs;
      opt.step();
    }

    epoch_stats stats;
    stats.epoch = epoch;
    stats.loss = loss_sum / static_cast<double>( n );
    bool const eval_now = val_split.size() > 0 &&
                          ( epoch % std::max<i32>( 1, cfg.eval_every ) == 0 || epoch == cfg.epochs );
    stats.val_acc = eval_now ? evaluate_soft( net, val_split ) : -1.0;
    report.epochs.push_back( stats );
    if ( cfg.progress )
    {
      if ( stats.val_acc >= 0 )
        std::printf( "epoch=%d loss=%.6f val_acc=%.4f\n", epoch, stats.loss, stats.val_acc );
      else
        std::printf( "epoch=%d loss=%.6f val_acc=-\n", epoch, stats.loss );
      std::fflush( stdout );
    }
  }
  auto const t1 = std::chrono::steady_clock::now();
  report.minutes = std::chrono::duration<double>( t1 - t0 ).count() / 60.0;
  return report;
}

} // namespace lgn
