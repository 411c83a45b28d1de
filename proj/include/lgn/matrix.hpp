/*!
  \file matrix.hpp
  \brief Minimal row-major matrix and packed bit matrix.
*/

#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <span>
#include <vector>

#include "common.hpp"

namespace lgn
{

/*! \brief Dense row-major matrix over a caller-chosen scalar. */
template<class T>
class matrix
{
public:
  matrix() = default;
  matrix( std::size_t rows, std::size_t cols, T fill = T{} )
      : rows_( rows ), cols_( cols ), data_( rows * cols, fill )
  {
  }

  void resize( std::size_t rows, std::size_t cols )
  {
    rows_ = rows;
    cols_ = cols;
    data_.assign( rows * cols, T{} );
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()( std::size_t r, std::size_t c ) { return data_[r * cols_ + c]; }
  T const& operator()( std::size_t r, std::size_t c ) const { return data_[r * cols_ + c]; }

  T* data() { return data_.data(); }
  T const* data() const { return data_.data(); }

  std::span<T> row( std::size_t r ) { return { data_.data() + r * cols_, cols_ }; }
  std::span<T const> row( std::size_t r ) const { return { data_.data() + r * cols_, cols_ }; }

  void fill( T v ) { std::fill( data_.begin(), data_.end(), v ); }

  bool operator==( matrix const& other ) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/*! \brief Row-major matrix of bits, 64 packed per word.
 *
 * Bit (r, c) lives in word r * words_per_row + c / 64 at position c % 64.
 * Padding bits past `cols` are kept zero.
 */
class bit_matrix
{
public:
  bit_matrix() = default;
  bit_matrix( std::size_t rows, std::size_t cols )
      : rows_( rows ), cols_( cols ), wpr_( ( cols + 63 ) / 64 ), words_( rows * wpr_, 0u )
  {
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t words_per_row() const { return wpr_; }

  bool get( std::size_t r, std::size_t c ) const
  {
    return ( words_[r * wpr_ + c / 64] >> ( c % 64 ) ) & 1u;
  }

  void set( std::size_t r, std::size_t c, bool v )
  {
    u64& w = words_[r * wpr_ + c / 64];
    u64 const mask = u64( 1 ) << ( c % 64 );
    w = v ? ( w | mask ) : ( w & ~mask );
  }

  std::span<u64> row_words( std::size_t r ) { return { words_.data() + r * wpr_, wpr_ }; }
  std::span<u64 const> row_words( std::size_t r ) const { return { words_.data() + r * wpr_, wpr_ }; }

  std::vector<u64> const& words() const { return words_; }
  std::vector<u64>& words() { return words_; }

  std::size_t popcount() const
  {
    std::size_t n = 0;
    for ( u64 w : words_ )
      n += std::popcount( w );
    return n;
  }

  bool operator==( bit_matrix const& other ) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t wpr_ = 0;
  std::vector<u64> words_;
};

/*! Expand one packed bit row into 0/1 scalars. */
template<class Real>
void unpack_bits_row( bit_matrix const& bits, std::size_t r, Real* out )
{
  auto const words = bits.row_words( r );
  std::size_t const cols = bits.cols();
  for ( std::size_t w = 0; w < words.size(); ++w )
  {
    u64 x = words[w];
    std::size_t const base = w * 64;
    std::size_t const n = std::min<std::size_t>( 64, cols - base );
    for ( std::size_t j = 0; j < n; ++j )
    {
      out[base + j] = Real( x & 1u );
      x >>= 1;
    }
  }
}

} // namespace lgn
