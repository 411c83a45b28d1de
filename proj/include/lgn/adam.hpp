/*!
  \file adam.hpp
  \brief Adam optimizer over flat parameter views.
*/

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "common.hpp"
#include "network.hpp"

namespace lgn
{

template<class Real>
struct adam_config
{
  Real lr = Real( 0.075 );
  Real beta1 = Real( 0.9 );
  Real beta2 = Real( 0.999 );
  Real eps = Real( 1e-8 );
};

/*! \brief Standard Adam with bias correction.
 *
 * Owns first/second-moment state shaped like the registered views.  A
 * non-finite gradient aborts the run; silently absorbing one corrupts every
 * parameter it touches through the moment estimates.
 */
template<class Real>
class adam
{
public:
  adam( std::vector<param_view<Real>> views, adam_config<Real> cfg )
      : views_( std::move( views ) ), cfg_( cfg )
  {
    require( cfg_.lr >= Real( 0 ), "adam: lr must be non-negative" );
    m_.resize( views_.size() );
    v_.resize( views_.size() );
    for ( std::size_t i = 0; i < views_.size(); ++i )
    {
      m_[i].assign( views_[i].size, Real( 0 ) );
      v_[i].assign( views_[i].size, Real( 0 ) );
    }
  }

  i32 step_count() const { return t_; }

  void step()
  {
    ++t_;
    Real const bc1 = Real( 1 ) - std::pow( cfg_.beta1, Real( t_ ) );
    Real const bc2 = Real( 1 ) - std::pow( cfg_.beta2, Real( t_ ) );
    for ( std::size_t view = 0; view < views_.size(); ++view )
    {
      auto const& pv = views_[view];
      Real* m = m_[view].data();
      Real* v = v_[view].data();
      bool finite = true;
#pragma omp parallel for reduction( && : finite ) schedule( static )
      for ( std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>( pv.size ); ++i )
      {
        Real const g = pv.grad[i];
        finite = finite && std::isfinite( static_cast<double>( g ) );
        m[i] = cfg_.beta1 * m[i] + ( Real( 1 ) - cfg_.beta1 ) * g;
        v[i] = cfg_.beta2 * v[i] + ( Real( 1 ) - cfg_.beta2 ) * g * g;
        Real const mhat = m[i] / bc1;
        Real const vhat = v[i] / bc2;
        pv.value[i] -= cfg_.lr * mhat / ( std::sqrt( vhat ) + cfg_.eps );
      }
      if ( !finite )
        throw error( "adam: non-finite gradient in parameter tensor " + std::to_string( view ) +
                     " at step " + std::to_string( t_ ) );
    }
  }

private:
  std::vector<param_view<Real>> views_;
  adam_config<Real> cfg_;
  std::vector<std::vector<Real>> m_;
  std::vector<std::vector<Real>> v_;
  i32 t_ = 0;
};

} // namespace lgn
