/*!
  \file data.hpp
  \brief Dataset ingestion: IDX and CIFAR-10 binary loaders, threshold
         binarization, thermometer encoding, augmentation, seeded splits,
         and a packed-bits cache file.

  Encodings produced here are pinned conventions the rest of the stack
  inherits (netlists record the encoding tag so circuits and datasets stay
  compatible):

    - "mnist-threshold-0.25": bit = pixel > 0.25, strict, D = 784;
    - "cifar10-channel-threshold-pixel": per RGB channel, 7 thresholds
      0.125..0.875; bit index = channel*(7*1024) + threshold*1024 + pixel,
      D = 21504.
*/

#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace lgn
{

inline constexpr std::array<double, 7> cifar_thresholds = { 0.125, 0.25, 0.375,
                                                            0.5,   0.625, 0.75, 0.875 };
inline constexpr double mnist_threshold = 0.25;
inline constexpr char const* mnist_encoding = "mnist-threshold-0.25";
inline constexpr char const* cifar_encoding = "cifar10-channel-threshold-pixel";

/*! Raw images in [0,1], channel-planar: pixels[((i*channels + c)*rows + r)*cols + x]. */
struct raw_images
{
  i32 n = 0;
  i32 rows = 0;
  i32 cols = 0;
  i32 channels = 1;
  std::vector<float> pixels;
  std::vector<i32> labels;

  float& at( i32 i, i32 c, i32 r, i32 x )
  {
    return pixels[( ( static_cast<std::size_t>( i ) * channels + c ) * rows + r ) * cols + x];
  }
  float at( i32 i, i32 c, i32 r, i32 x ) const
  {
    return pixels[( ( static_cast<std::size_t>( i ) * channels + c ) * rows + r ) * cols + x];
  }
};

/*! Binarized dataset: packed bits, one row per sample. */
struct labeled_bits
{
  bit_matrix inputs;
  std::vector<i32> labels;
  i32 num_classes = 0;
  std::string encoding;

  std::size_t size() const { return labels.size(); }
};

// ---------------------------------------------------------------- IDX files

namespace detail
{

inline u32 read_be32( std::istream& in, char const* what, std::size_t offset )
{
  unsigned char b[4];
  in.read( reinterpret_cast<char*>( b ), 4 );
  if ( !in )
    throw io_error( std::string( "idx: truncated " ) + what + " at offset " +
                    std::to_string( offset ) );
  return ( u32( b[0] ) << 24 ) | ( u32( b[1] ) << 16 ) | ( u32( b[2] ) << 8 ) | u32( b[3] );
}

inline void write_be32( std::ostream& out, u32 v )
{
  unsigned char b[4] = { static_cast<unsigned char>( v >> 24 ), static_cast<unsigned char>( v >> 16 ),
                         static_cast<unsigned char>( v >> 8 ), static_cast<unsigned char>( v ) };
  out.write( reinterpret_cast<char const*>( b ), 4 );
}

} // namespace detail

struct idx_images
{
  i32 n = 0;
  i32 rows = 0;
  i32 cols = 0;
  std::vector<u8> bytes; // n*rows*cols, row-major
};

inline idx_images read_idx_images( std::string const& path )
{
  std::ifstream in( path, std::ios::binary );
  if ( !in )
    throw io_error( "idx: cannot open " + path );
  u32 const magic = detail::read_be32( in, "magic", 0 );
  if ( magic != 0x00000803u )
    throw io_error( "idx: bad image magic 0x" + std::to_string( magic ) + " at offset 0 in " + path );
  idx_images img;
  img.n = static_cast<i32>( detail::read_be32( in, "count", 4 ) );
  img.rows = static_cast<i32>( detail::read_be32( in, "rows", 8 ) );
  img.cols = static_cast<i32>( detail::read_be32( in, "cols", 12 ) );
  std::size_t const total = static_cast<std::size_t>( img.n ) * img.rows * img.cols;
  img.bytes.resize( total );
  in.read( reinterpret_cast<char*>( img.bytes.data() ), total );
  if ( static_cast<std::size_t>( in.gcount() ) != total )
    throw io_error( "idx: truncated pixel data in " + path + " (expected " +
                    std::to_string( total ) + " bytes, got " + std::to_string( in.gcount() ) + ")" );
  return img;
}

inline std::vector<u8> read_idx_labels( std::string const& path )
{
  std::ifstream in( path, std::ios::binary );
  if ( !in )
    throw io_error( "idx: cannot open " + path );
  u32 const magic = detail::read_be32( in, "magic", 0 );
  if ( magic != 0x00000801u )
    throw io_error( "idx: bad label magic 0x" + std::to_string( magic ) + " at offset 0 in " + path );
  u32 const n = detail::read_be32( in, "count", 4 );
  std::vector<u8> labels( n );
  in.read( reinterpret_cast<char*>( labels.data() ), n );
  if ( static_cast<std::size_t>( in.gcount() ) != n )
    throw io_error( "idx: truncated label data in " + path );
  return labels;
}

inline void write_idx_images( std::string const& path, idx_images const& img )
{
  std::ofstream out( path, std::ios::binary );
  if ( !out )
    throw io_error( "idx: cannot create " + path );
  detail::write_be32( out, 0x00000803u );
  detail::write_be32( out, static_cast<u32>( img.n ) );
  detail::write_be32( out, static_cast<u32>( img.rows ) );
  detail::write_be32( out, static_cast<u32>( img.cols ) );
  out.write( reinterpret_cast<char const*>( img.bytes.data() ), img.bytes.size() );
}

inline void write_idx_labels( std::string const& path, std::vector<u8> const& labels )
{
  std::ofstream out( path, std::ios::binary );
  if ( !out )
    throw io_error( "idx: cannot create " + path );
  detail::write_be32( out, 0x00000801u );
  detail::write_be32( out, static_cast<u32>( labels.size() ) );
  out.write( reinterpret_cast<char const*>( labels.data() ), labels.size() );
}

struct mnist_data
{
  raw_images train;
  raw_images test;
};

/*! Load the four canonical MNIST files from `dir`, scaled to [0,1]. */
inline mnist_data load_mnist( std::string const& dir )
{
  auto to_raw = []( idx_images const& img, std::vector<u8> const& labels, char const* split ) {
    if ( img.n != static_cast<i32>( labels.size() ) )
      throw io_error( std::string( "mnist: image/label count mismatch in " ) + split );
    raw_images r;
    r.n = img.n;
    r.rows = img.rows;
    r.cols = img.cols;
    r.channels = 1;
    r.pixels.resize( img.bytes.size() );
    for ( std::size_t i = 0; i < img.bytes.size(); ++i )
      r.pixels[i] = static_cast<float>( img.bytes[i] ) / 255.0f;
    r.labels.assign( labels.begin(), labels.end() );
    return r;
  };

  mnist_data data;
  data.train = to_raw( read_idx_images( dir + "/train-images-idx3-ubyte" ),
                       read_idx_labels( dir + "/train-labels-idx1-ubyte" ), "train" );
  data.test = to_raw( read_idx_images( dir + "/t10k-images-idx3-ubyte" ),
                      read_idx_labels( dir + "/t10k-labels-idx1-ubyte" ), "test" );
  if ( data.train.n != 60000 )
    throw io_error( "mnist: expected 60000 training images, got " + std::to_string( data.train.n ) );
  if ( data.test.n != 10000 )
    throw io_error( "mnist: expected 10000 test images, got " + std::to_string( data.test.n ) );
  if ( data.train.rows != 28 || data.train.cols != 28 )
    throw io_error( "mnist: expected 28x28 images" );
  return data;
}

// ------------------------------------------------------------- CIFAR-10

/*! Load CIFAR-10 binary batches (3073-byte records: label + 3072 pixel bytes). */
inline raw_images load_cifar_batches( std::vector<std::string> const& paths )
{
  constexpr std::size_t record = 3073;
  raw_images r;
  r.rows = 32;
  r.cols = 32;
  r.channels = 3;
  for ( auto const& path : paths )
  {
    std::ifstream in( path, std::ios::binary );
    if ( !in )
      throw io_error( "cifar: cannot open " + path );
    std::vector<char> blob( ( std::istreambuf_iterator<char>( in ) ),
                            std::istreambuf_iterator<char>() );
    if ( blob.size() % record != 0 )
      throw io_error( "cifar: file size " + std::to_string( blob.size() ) +
                      " is not a multiple of 3073 in " + path );
    std::size_t const n = blob.size() / record;
    for ( std::size_t i = 0; i < n; ++i )
    {
      unsigned char const* rec = reinterpret_cast<unsigned char const*>( blob.data() ) + i * record;
      r.labels.push_back( rec[0] );
      for ( std::size_t p = 0; p < 3072; ++p )
        r.pixels.push_back( static_cast<float>( rec[1 + p] ) / 255.0f );
    }
    r.n += static_cast<i32>( n );
  }
  return r;
}

struct cifar_data
{
  raw_images train;
  raw_images test;
};

inline cifar_data load_cifar10( std::string const& dir )
{
  cifar_data data;
  std::vector<std::string> train_paths;
  for ( int b = 1; b <= 5; ++b )
    train_paths.push_back( dir + "/data_batch_" + std::to_string( b ) + ".bin" );
  data.train = load_cifar_batches( train_paths );
  data.test = load_cifar_batches( { dir + "/test_batch.bin" } );
  if ( data.train.n != 50000 )
    throw io_error( "cifar: expected 50000 training images, got " + std::to_string( data.train.n ) );
  if ( data.test.n != 10000 )
    throw io_error( "cifar: expected 10000 test images, got " + std::to_string( data.test.n ) );
  return data;
}

// --------------------------------------------------------- binarization

/*! bit = pixel > 0.25 (strict). */
inline labeled_bits binarize_mnist( raw_images const& raw )
{
  require( raw.channels == 1, "binarize_mnist: expects grayscale" );
  std::size_t const d = static_cast<std::size_t>( raw.rows ) * raw.cols;
  labeled_bits out;
  out.inputs = bit_matrix( raw.n, d );
  out.labels = raw.labels;
  out.num_classes = 10;
  out.encoding = mnist_encoding;
  for ( i32 i = 0; i < raw.n; ++i )
  {
    float const* px = raw.pixels.data() + static_cast<std::size_t>( i ) * d;
    for ( std::size_t p = 0; p < d; ++p )
      if ( px[p] > static_cast<float>( mnist_threshold ) )
        out.inputs.set( i, p, true );
  }
  return out;
}

/*! Thermometer encoding: 7 strict thresholds per channel value. */
inline labeled_bits binarize_cifar( raw_images const& raw )
{
  require( raw.channels == 3 && raw.rows == 32 && raw.cols == 32,
           "binarize_cifar: expects 32x32 RGB" );
  constexpr std::size_t pixels = 1024;
  constexpr std::size_t nt = cifar_thresholds.size();
  std::size_t const d = 3 * nt * pixels;
  labeled_bits out;
  out.inputs = bit_matrix( raw.n, d );
  out.labels = raw.labels;
  out.num_classes = 10;
  out.encoding = cifar_encoding;
  for ( i32 i = 0; i < raw.n; ++i )
  {
    for ( i32 c = 0; c < 3; ++c )
    {
      float const* px =
          raw.pixels.data() + ( static_cast<std::size_t>( i ) * 3 + c ) * pixels;
      for ( std::size_t t = 0; t < nt; ++t )
      {
        float const th = static_cast<float>( cifar_thresholds[t] );
        std::size_t const base = c * nt * pixels + t * pixels;
        for ( std::size_t p = 0; p < pixels; ++p )
          if ( px[p] > th )
            out.inputs.set( i, base + p, true );
      }
    }
  }
  return out;
}

// --------------------------------------------------------- augmentation

struct affine_params
{
  double rot_deg = 0;
  double shear_deg = 0;
  double scale = 1;
};

/*! Inverse-mapped affine warp about the image center with bilinear sampling
 *  and zero padding.  Identity parameters reproduce the input exactly. */
inline void warp_affine( float const* src, float* dst, i32 rows, i32 cols,
                         affine_params const& par )
{
  double const th = par.rot_deg * ( 3.14159265358979323846 / 180.0 );
  double const sh = std::tan( par.shear_deg * ( 3.14159265358979323846 / 180.0 ) );
  // forward map: rotate . shear . scale; invert analytically
  double const a = std::cos( th ) * par.scale;
  double const b = ( std::cos( th ) * sh - std::sin( th ) ) * par.scale;
  double const c = std::sin( th ) * par.scale;
  double const d = ( std::sin( th ) * sh + std::cos( th ) ) * par.scale;
  double const det = a * d - b * c;
  double const ia = d / det, ib = -b / det, ic = -c / det, id = a / det;
  double const cy = ( rows - 1 ) / 2.0, cx = ( cols - 1 ) / 2.0;

  for ( i32 y = 0; y < rows; ++y )
  {
    for ( i32 x = 0; x < cols; ++x )
    {
      double const dy = y - cy, dx = x - cx;
      double const sx = ia * dx + ib * dy + cx;
      double const sy = ic * dx + id * dy + cy;
      i32 const x0 = static_cast<i32>( std::floor( sx ) );
      i32 const y0 = static_cast<i32>( std::floor( sy ) );
      double const fx = sx - x0, fy = sy - y0;
      auto sample = [&]( i32 yy, i32 xx ) -> double {
        if ( yy < 0 || yy >= rows || xx < 0 || xx >= cols )
          return 0.0;
        return src[yy * cols + xx];
      };
      double const v = ( 1 - fy ) * ( ( 1 - fx ) * sample( y0, x0 ) + fx * sample( y0, x0 + 1 ) ) +
                       fy * ( ( 1 - fx ) * sample( y0 + 1, x0 ) + fx * sample( y0 + 1, x0 + 1 ) );
      dst[y * cols + x] = static_cast<float>( v );
    }
  }
}

/*! One transformed replica of the whole set; stream (seed, copy, image) makes
 *  per-image draws independent of evaluation order. */
inline raw_images augment_mnist_affine_copy( raw_images const& raw, u64 seed, i32 copy )
{
  require( raw.channels == 1, "augment_mnist_affine: expects grayscale" );
  raw_images out;
  out.n = raw.n;
  out.rows = raw.rows;
  out.cols = raw.cols;
  out.channels = 1;
  out.labels = raw.labels;
  std::size_t const d = static_cast<std::size_t>( raw.rows ) * raw.cols;
  out.pixels.resize( raw.pixels.size() );
#pragma omp parallel for schedule( static )
  for ( std::ptrdiff_t i = 0; i < raw.n; ++i )
  {
    rng r( seed, stream::augment, static_cast<u64>( copy ), static_cast<u64>( i ) );
    affine_params par;
    par.rot_deg = r.uniform( -10.0, 10.0 );
    par.shear_deg = r.uniform( -10.0, 10.0 );
    par.scale = r.uniform( 0.9, 1.1 );
    warp_affine( raw.pixels.data() + i * d, out.pixels.data() + i * d, raw.rows, raw.cols, par );
  }
  return out;
}

/*! `copies` independent transformed replicas, stacked. */
inline raw_images augment_mnist_affine( raw_images const& raw, u64 seed, i32 copies = 10 )
{
  require( copies >= 1, "augment_mnist_affine: copies must be positive" );
  raw_images out;
  out.rows = raw.rows;
  out.cols = raw.cols;
  out.channels = 1;
  for ( i32 copy = 0; copy < copies; ++copy )
  {
    raw_images rep = augment_mnist_affine_copy( raw, seed, copy );
    out.pixels.insert( out.pixels.end(), rep.pixels.begin(), rep.pixels.end() );
    out.labels.insert( out.labels.end(), rep.labels.begin(), rep.labels.end() );
    out.n += rep.n;
  }
  return out;
}

/*! Random 32x32 crop from 4-pixel reflection padding; crop offset (4,4) is
 *  the identity.  `flip` mirrors columns. */
inline void crop_flip_cifar( float const* src, float* dst, i32 dy, i32 dx, bool flip )
{
  auto reflect = []( i32 q ) {
    if ( q < 0 )
      return -q;
    if ( q >= 32 )
      return 62 - q;
    return q;
  };
  for ( i32 c = 0; c < 3; ++c )
  {
    float const* plane = src + c * 1024;
    float* out = dst + c * 1024;
    for ( i32 y = 0; y < 32; ++y )
    {
      for ( i32 x = 0; x < 32; ++x )
      {
        i32 const sy = reflect( y + dy - 4 );
        i32 const xx = flip ? 31 - x : x;
        i32 const sx = reflect( xx + dx - 4 );
        out[y * 32 + x] = plane[sy * 32 + sx];
      }
    }
  }
}

inline raw_images augment_cifar_copy( raw_images const& raw, u64 seed, i32 copy )
{
  require( raw.channels == 3 && raw.rows == 32 && raw.cols == 32,
           "augment_cifar: expects 32x32 RGB" );
  raw_images out;
  out.n = raw.n;
  out.rows = 32;
  out.cols = 32;
  out.channels = 3;
  out.labels = raw.labels;
  out.pixels.resize( raw.pixels.size() );
#pragma omp parallel for schedule( static )
  for ( std::ptrdiff_t i = 0; i < raw.n; ++i )
  {
    rng r( seed, stream::augment, static_cast<u64>( copy ), static_cast<u64>( i ) );
    i32 const dy = static_cast<i32>( r.below( 9 ) );
    i32 const dx = static_cast<i32>( r.below( 9 ) );
    bool const flip = r.coin();
    crop_flip_cifar( raw.pixels.data() + i * 3072, out.pixels.data() + i * 3072, dy, dx, flip );
  }
  return out;
}

inline raw_images augment_cifar( raw_images const& raw, u64 seed, i32 copies = 8 )
{
  require( copies >= 1, "augment_cifar: copies must be positive" );
  raw_images out;
  out.rows = 32;
  out.cols = 32;
  out.channels = 3;
  for ( i32 copy = 0; copy < copies; ++copy )
  {
    raw_images rep = augment_cifar_copy( raw, seed, copy );
    out.pixels.insert( out.pixels.end(), rep.pixels.begin(), rep.pixels.end() );
    out.labels.insert( out.labels.end(), rep.labels.begin(), rep.labels.end() );
    out.n += rep.n;
  }
  return out;
}

// ------------------------------------------------------------- splits

struct split_indices
{
  std::vector<u32> train;
  std::vector<u32> val;
};

/*! Seeded random partition; validation takes `val_size` samples. */
inline split_indices make_splits( std::size_t n, u64 seed, std::size_t val_size )
{
  require( val_size < n, "make_splits: val_size must leave training data" );
  std::vector<u32> perm( n );
  for ( std::size_t i = 0; i < n; ++i )
    perm[i] = static_cast<u32>( i );
  rng r( seed, stream::split );
  r.shuffle( perm );
  split_indices s;
  s.val.assign( perm.end() - val_size, perm.end() );
  s.train.assign( perm.begin(), perm.end() - val_size );
  std::sort( s.train.begin(), s.train.end() );
  std::sort( s.val.begin(), s.val.end() );
  return s;
}

inline raw_images subset( raw_images const& raw, std::vector<u32> const& idx )
{
  raw_images out;
  out.rows = raw.rows;
  out.cols = raw.cols;
  out.channels = raw.channels;
  out.n = static_cast<i32>( idx.size() );
  std::size_t const d = static_cast<std::size_t>( raw.rows ) * raw.cols * raw.channels;
  out.pixels.resize( idx.size() * d );
  out.labels.resize( idx.size() );
  for ( std::size_t i = 0; i < idx.size(); ++i )
  {
    std::copy_n( raw.pixels.data() + static_cast<std::size_t>( idx[i] ) * d, d,
                 out.pixels.data() + i * d );
    out.labels[i] = raw.labels[idx[i]];
  }
  return out;
}

inline labeled_bits subset( labeled_bits const& bits, std::vector<u32> const& idx )
{
  labeled_bits out;
  out.inputs = bit_matrix( idx.size(), bits.inputs.cols() );
  out.labels.resize( idx.size() );
  out.num_classes = bits.num_classes;
  out.encoding = bits.encoding;
  for ( std::size_t i = 0; i < idx.size(); ++i )
  {
    auto const src = bits.inputs.row_words( idx[i] );
    auto dst = out.inputs.row_words( i );
    std::copy( src.begin(), src.end(), dst.begin() );
    out.labels[i] = bits.labels[idx[i]];
  }
  return out;
}

// ---------------------------------------------------------- bits cache

inline constexpr char bits_cache_magic[8] = { 'L', 'G', 'N', 'B', 'I', 'T', 'S', '1' };

/*! Cache header: magic, D, N, encoding tag, threshold list; then labels and
 *  packed little-endian rows. */
inline void save_bits_cache( std::string const& path, labeled_bits const& bits,
                             std::vector<double> const& thresholds )
{
  std::ofstream out( path, std::ios::binary );
  if ( !out )
    throw io_error( "bits cache: cannot create " + path );
  out.write( bits_cache_magic, 8 );
  u64 const d = bits.inputs.cols();
  u64 const n = bits.inputs.rows();
  out.write( reinterpret_cast<char const*>( &d ), 8 );
  out.write( reinterpret_cast<char const*>( &n ), 8 );
  u32 const tag_len = static_cast<u32>( bits.encoding.size() );
  out.write( reinterpret_cast<char const*>( &tag_len ), 4 );
  out.write( bits.encoding.data(), tag_len );
  u32 const nth = static_cast<u32>( thresholds.size() );
  out.write( reinterpret_cast<char const*>( &nth ), 4 );
  out.write( reinterpret_cast<char const*>( thresholds.data() ), 8 * nth );
  i32 const k = bits.num_classes;
  out.write( reinterpret_cast<char const*>( &k ), 4 );
  out.write( reinterpret_cast<char const*>( bits.labels.data() ), 4 * n );
  out.write( reinterpret_cast<char const*>( bits.inputs.words().data() ),
             8 * bits.inputs.words().size() );
  if ( !out )
    throw io_error( "bits cache: write failed for " + path );
}

inline labeled_bits load_bits_cache( std::string const& path,
                                     std::vector<double>* thresholds_out = nullptr )
{
  std::ifstream in( path, std::ios::binary );
  if ( !in )
    throw io_error( "bits cache: cannot open " + path );
  char magic[8];
  in.read( magic, 8 );
  if ( !in || std::memcmp( magic, bits_cache_magic, 8 ) != 0 )
    throw io_error( "bits cache: bad magic in " + path );
  u64 d = 0, n = 0;
  in.read( reinterpret_cast<char*>( &d ), 8 );
  in.read( reinterpret_cast<char*>( &n ), 8 );
  u32 tag_len = 0;
  in.read( reinterpret_cast<char*>( &tag_len ), 4 );
  labeled_bits bits;
  bits.encoding.resize( tag_len );
  in.read( bits.encoding.data(), tag_len );
  u32 nth = 0;
  in.read( reinterpret_cast<char*>( &nth ), 4 );
  std::vector<double> thresholds( nth );
  in.read( reinterpret_cast<char*>( thresholds.data() ), 8 * nth );
  if ( thresholds_out )
    *thresholds_out = std::move( thresholds );
  in.read( reinterpret_cast<char*>( &bits.num_classes ), 4 );
  bits.labels.resize( n );
  in.read( reinterpret_cast<char*>( bits.labels.data() ), 4 * n );
  bits.inputs = bit_matrix( n, d );
  in.read( reinterpret_cast<char*>( bits.inputs.words().data() ), 8 * bits.inputs.words().size() );
  if ( !in )
    throw io_error( "bits cache: truncated file " + path );
  return bits;
}

} // namespace lgn
