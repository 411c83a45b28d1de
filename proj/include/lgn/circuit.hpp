/*!
  \file circuit.hpp
  \brief Hardened combinational circuit and its two inference engines.

  `binarize` collapses every softmax in a trained network to its argmax: each
  gate keeps one opcode and two input wires.  The result is purely
  feed-forward; wires only reference the previous layer (or the input vector
  for layer 0).

  Inference comes in two exactly-equivalent flavors:
    - `infer_scalar`: one sample at a time, wire by wire;
    - `infer_bitparallel`: 64 samples per machine word, one bitwise op per
      gate per word, then per-group popcount voting.
*/

#pragma once

#include <map>
#include <bit>
#include <string>
#include <vector>

#include "common.hpp"
#include "matrix.hpp"
#include "network.hpp"

namespace lgn
{

struct gate_record
{
  u8 opcode;
  i32 in_a;
  i32 in_b;

  bool operator==( gate_record const& ) const = default;
};

struct binary_circuit
{
  i32 input_dim = 0;
  i32 num_classes = 0;
  std::vector<std::vector<gate_record>> layers;
  std::vector<std::pair<i32, i32>> groups; // over the last layer
  std::string input_encoding;
  std::map<std::string, std::string> metadata;

  i32 total_gates() const
  {
    std::size_t n = 0;
    for ( auto const& l : layers )
      n += l.size();
    return static_cast<i32>( n );
  }

  bool operator==( binary_circuit const& other ) const
  {
    return input_dim == other.input_dim && num_classes == other.num_classes &&
           layers == other.layers && groups == other.groups &&
           input_encoding == other.input_encoding && metadata == other.metadata;
  }
};

/*! Structural check: opcode range, adjacent-layer wiring, group partition. */
inline void validate( binary_circuit const& c )
{
  require( c.input_dim >= 1, "circuit: input_dim must be positive" );
  require( !c.layers.empty(), "circuit: no layers" );
  i32 prev = c.input_dim;
  for ( auto const& layer : c.layers )
  {
    require( !layer.empty(), "circuit: empty layer" );
    for ( auto const& g : layer )
    {
      require( g.opcode < num_gate_ops, "circuit: opcode out of range" );
      require( g.in_a >= 0 && g.in_a < prev && g.in_b >= 0 && g.in_b < prev,
               "circuit: wire references outside previous layer" );
    }
    prev = static_cast<i32>( layer.size() );
  }
  require( static_cast<i32>( c.groups.size() ) == c.num_classes, "circuit: group count" );
  i32 expect = 0;
  for ( auto const& [lo, hi] : c.groups )
  {
    require( lo == expect && hi > lo, "circuit: groups must tile the last layer" );
    expect = hi;
  }
  require( expect == prev, "circuit: groups must cover the last layer" );
}

/*! \brief Discretize a trained network (mode of every distribution).
 *
 * Opcode ties resolve to the lowest code, wire ties to the lowest index, so
 * binarization is deterministic.
 */
template<class Real>
binary_circuit binarize( logic_network<Real> const& net )
{
  binary_circuit c;
  c.input_dim = net.config().input_dim;
  c.num_classes = net.config().num_classes;
  c.groups = net.groups();
  for ( auto const& layer : net.layers() )
  {
    matrix<i32> const wires = harden( layer.conn );
    std::vector<gate_record> gates( layer.conn.width );
    for ( i32 g = 0; g < layer.conn.width; ++g )
    {
      auto const logits = layer.gate_logits.row( g );
      int best = 0;
      for ( int i = 1; i < num_gate_ops; ++i )
        if ( logits[i] > logits[best] )
          best = i;
      gates[g] = { static_cast<u8>( best ), wires( g, 0 ), wires( g, 1 ) };
    }
    c.layers.push_back( std::move( gates ) );
  }
  validate( c );
  return c;
}

/*! Single-sample evaluation; the reference semantics for everything else. */
inline i32 infer_scalar( binary_circuit const& c, std::vector<u8> const& x )
{
  require( x.size() == static_cast<std::size_t>( c.input_dim ), "infer_scalar: input size" );
  for ( u8 v : x )
    require( v <= 1, "infer_scalar: inputs must be bits" );

  std::vector<u8> cur( x.begin(), x.end() );
  std::vector<u8> next;
  for ( auto const& layer : c.layers )
  {
    next.resize( layer.size() );
    for ( std::size_t g = 0; g < layer.size(); ++g )
      next[g] = hard_eval( gate_opcode( layer[g].opcode ), cur[layer[g].in_a] != 0,
                           cur[layer[g].in_b] != 0 );
    cur.swap( next );
  }

  i32 best = 0;
  i32 best_count = -1;
  for ( i32 cl = 0; cl < c.num_classes; ++cl )
  {
    i32 count = 0;
    for ( i32 g = c.groups[cl].first; g < c.groups[cl].second; ++g )
      count += cur[g];
    if ( count > best_count )
    {
      best = cl;
      best_count = count;
    }
  }
  return best;
}

namespace detail
{

/*! One bitwise instruction evaluates a gate for 64 samples. */
inline void eval_gate_words( u8 op, u64 const* a, u64 const* b, u64* out, std::size_t n )
{
  switch ( op )
  {
  case 0:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = 0;
    break;
  case 1:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = a[i] & b[i];
    break;
  case 2:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = a[i] & ~b[i];
    break;
  case 3:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = a[i];
    break;
  case 4:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = ~a[i] & b[i];
    break;
  case 5:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = b[i];
    break;
  case 6:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = a[i] ^ b[i];
    break;
  case 7:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = a[i] | b[i];
    break;
  case 8:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = ~( a[i] | b[i] );
    break;
  case 9:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = ~( a[i] ^ b[i] );
    break;
  case 10:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = ~b[i];
    break;
  case 11:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = a[i] | ~b[i];
    break;
  case 12:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = ~a[i];
    break;
  case 13:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = ~a[i] | b[i];
    break;
  case 14:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = ~( a[i] & b[i] );
    break;
  default:
    for ( std::size_t i = 0; i < n; ++i )
      out[i] = ~u64( 0 );
    break;
  }
}

} // namespace detail

/*! \brief Wires-by-samples bit plane: one row of words per wire, bit j of a
 *  word is sample j's value.  Padding lanes past the batch stay zero. */
struct bit_plane
{
  std::size_t wires = 0;
  std::size_t batch = 0;
  std::size_t words = 0; // per wire
  std::vector<u64> data;

  void resize( std::size_t w, std::size_t n )
  {
    wires = w;
    batch = n;
    words = ( n + 63 ) / 64;
    data.assign( w * words, 0 );
  }

  u64* row( std::size_t wire ) { return data.data() + wire * words; }
  u64 const* row( std::size_t wire ) const { return data.data() + wire * words; }

  u64 tail_mask() const
  {
    std::size_t const rem = batch % 64;
    return rem == 0 ? ~u64( 0 ) : ( ( u64( 1 ) << rem ) - 1 );
  }
};

/*! Transpose sample-major bits into a wire-major plane. */
inline bit_plane pack_bit_plane( bit_matrix const& samples )
{
  bit_plane plane;
  plane.resize( samples.cols(), samples.rows() );
  for ( std::size_t s = 0; s < samples.rows(); ++s )
  {
    auto const row = samples.row_words( s );
    u64 const bit = u64( 1 ) << ( s % 64 );
    std::size_t const word = s / 64;
    for ( std::size_t w = 0; w < row.size(); ++w )
    {
      u64 x = row[w];
      while ( x )
      {
        std::size_t const c = w * 64 + static_cast<std::size_t>( std::countr_zero( x ) );
        plane.data[c * plane.words + word] |= bit;
        x &= x - 1;
      }
    }
  }
  return plane;
}

/*! \brief Batched hard inference, 64 samples per word.
 *
 * Bit-exactly matches `infer_scalar` on every sample, including the
 * lowest-class tie rule of the popcount vote.
 */
inline std::vector<i32> infer_bitparallel( binary_circuit const& c, bit_matrix const& samples )
{
  require( samples.cols() == static_cast<std::size_t>( c.input_dim ), "infer_bitparallel: input size" );
  std::size_t const n = samples.rows();
  bit_plane cur = pack_bit_plane( samples );
  bit_plane next;
  u64 const tail = cur.tail_mask();

  for ( auto const& layer : c.layers )
  {
    next.resize( layer.size(), n );
#pragma omp parallel for schedule( static )
    for ( std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>( layer.size() ); ++g )
    {
      auto const& rec = layer[g];
      u64* out = next.row( g );
      detail::eval_gate_words( rec.opcode, cur.row( rec.in_a ), cur.row( rec.in_b ), out,
                               next.words );
      out[next.words - 1] &= tail; // keep padding lanes zero through NOT-type ops
    }
    std::swap( cur, next );
  }

  // per-class popcount per sample (class-major counts keep the writes contiguous)
  matrix<i32> counts( c.num_classes, n );
#pragma omp parallel for schedule( static )
  for ( std::ptrdiff_t cl = 0; cl < c.num_classes; ++cl )
  {
    i32* row = counts.data() + cl * n;
    for ( i32 g = c.groups[cl].first; g < c.groups[cl].second; ++g )
    {
      u64 const* words = cur.row( g );
      for ( std::size_t w = 0; w < cur.words; ++w )
      {
        u64 const x = words[w];
        std::size_t const base = w * 64;
        std::size_t const lanes = std::min<std::size_t>( 64, n - base );
        for ( std::size_t lane = 0; lane < lanes; ++lane )
          row[base + lane] += static_cast<i32>( ( x >> lane ) & 1u );
      }
    }
  }

  std::vector<i32> pred( n );
#pragma omp parallel for schedule( static )
  for ( std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>( n ); ++s )
  {
    i32 best = 0;
    i32 best_count = counts( 0, s );
    for ( i32 cl = 1; cl < c.num_classes; ++cl )
    {
      if ( counts( cl, s ) > best_count )
      {
        best = cl;
        best_count = counts( cl, s );
      }
    }
    pred[s] = best;
  }
  return pred;
}

/*! Accuracy of the hardened circuit on a binarized split. */
inline double evaluate_circuit( binary_circuit const& c, bit_matrix const& inputs,
                                std::vector<i32> const& labels )
{
  auto const pred = infer_bitparallel( c, inputs );
  std::size_t correct = 0;
  for ( std::size_t s = 0; s < pred.size(); ++s )
    if ( pred[s] == labels[s] )
      ++correct;
  return static_cast<double>( correct ) / static_cast<double>( pred.size() );
}

struct consistency_report
{
  std::size_t samples = 0;
  std::size_t agreements = 0;
  double rate = 0;
};

/*! Agreement between the soft network's argmax and the hardened circuit's
 *  popcount vote on the same binary inputs. */
template<class Real>
consistency_report soft_hard_consistency_check( logic_network<Real> const& net,
                                                binary_circuit const& circuit,
                                                bit_matrix const& samples )
{
  std::size_t const n = samples.rows();
  std::size_t const d = samples.cols();
  auto const hard_pred = infer_bitparallel( circuit, samples );

  consistency_report report;
  report.samples = n;
  forward_pass<Real> pass;
  matrix<Real> x;
  std::size_t const chunk = 1024;
  for ( std::size_t start = 0; start < n; start += chunk )
  {
    std::size_t const bs = std::min( chunk, n - start );
    x.resize( bs, d );
    for ( std::size_t s = 0; s < bs; ++s )
      unpack_bits_row( samples, start + s, x.data() + s * d );
    net.forward( x, pass );
    for ( std::size_t s = 0; s < bs; ++s )
    {
      auto const z = pass.class_logits.row( s );
      i32 soft = 0;
      for ( i32 cl = 1; cl < static_cast<i32>( z.size() ); ++cl )
        if ( z[cl] > z[soft] )
          soft = cl;
      if ( soft == hard_pred[start + s] )
        ++report.agreements;
    }
  }
  report.rate = n == 0 ? 1.0 : static_cast<double>( report.agreements ) / static_cast<double>( n );
  return report;
}

} // namespace lgn
