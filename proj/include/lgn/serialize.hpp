/*!
  \file serialize.hpp
  \brief Checkpoints (binary), netlists (versioned JSON), and training reports.

  The checkpoint is a flat little-endian dump of every parameter tensor behind
  a JSON config header, so identical training runs produce byte-identical
  files.  The netlist is human-inspectable JSON; nlohmann keeps object keys
  sorted, which makes re-serialization reproduce the exact bytes.
*/

#pragma once

#include <fstream>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "circuit.hpp"
#include "common.hpp"
#include "network.hpp"
#include "trainer.hpp"

namespace lgn
{

using json = nlohmann::json;

inline constexpr char checkpoint_magic[8] = { 'L', 'G', 'N', 'C', 'K', 'P', 'T', '1' };
inline constexpr u32 checkpoint_version = 1;
inline constexpr char const* netlist_format = "lgn-netlist";
inline constexpr u32 netlist_version = 1;

namespace detail
{

inline wiring wiring_from_name( std::string const& name )
{
  if ( name == "fixed" )
    return wiring::fixed;
  if ( name == "top_k" )
    return wiring::top_k;
  if ( name == "learnable" )
    return wiring::learnable;
  throw io_error( "unknown wiring strategy '" + name + "'" );
}

template<class T>
void write_array( std::ostream& out, std::vector<T> const& v )
{
  u64 const n = v.size();
  out.write( reinterpret_cast<char const*>( &n ), 8 );
  out.write( reinterpret_cast<char const*>( v.data() ), sizeof( T ) * n );
}

template<class T>
std::vector<T> read_array( std::istream& in, std::string const& path )
{
  u64 n = 0;
  in.read( reinterpret_cast<char*>( &n ), 8 );
  std::vector<T> v( n );
  in.read( reinterpret_cast<char*>( v.data() ), sizeof( T ) * n );
  if ( !in )
    throw io_error( "checkpoint: truncated array in " + path );
  return v;
}

} // namespace detail

inline json config_to_json( network_config<float> const& cfg )
{
  return json{ { "input_dim", cfg.input_dim },
               { "num_classes", cfg.num_classes },
               { "layer_widths", cfg.layer_widths },
               { "strategy", std::string( wiring_name( cfg.strategy ) ) },
               { "k", cfg.k },
               { "tau", cfg.tau },
               { "tau_g", cfg.tau_g },
               { "tau_c", cfg.tau_c },
               { "mode", cfg.mode == gate_eval::basis_projection ? "basis" : "full" } };
}

inline network_config<float> config_from_json( json const& j )
{
  network_config<float> cfg;
  cfg.input_dim = j.at( "input_dim" ).get<i32>();
  cfg.num_classes = j.at( "num_classes" ).get<i32>();
  cfg.layer_widths = j.at( "layer_widths" ).get<std::vector<i32>>();
  cfg.strategy = detail::wiring_from_name( j.at( "strategy" ).get<std::string>() );
  cfg.k = j.at( "k" ).get<i32>();
  cfg.tau = j.at( "tau" ).get<float>();
  cfg.tau_g = j.at( "tau_g" ).get<float>();
  cfg.tau_c = j.at( "tau_c" ).get<float>();
  cfg.mode = j.at( "mode" ).get<std::string>() == "full" ? gate_eval::full_evaluation
                                                         : gate_eval::basis_projection;
  return cfg;
}

/*! Write config header plus every parameter tensor. `extra` rides along
 *  (dataset name, arch string, metrics) and comes back on load. */
inline void save_checkpoint( std::string const& path, logic_network<float> const& net,
                             json extra = json::object() )
{
  std::ofstream out( path, std::ios::binary );
  if ( !out )
    throw io_error( "checkpoint: cannot create " + path );
  out.write( checkpoint_magic, 8 );
  out.write( reinterpret_cast<char const*>( &checkpoint_version ), 4 );

  json header = { { "config", config_to_json( net.config() ) },
                  { "seed", net.seed() },
                  { "extra", std::move( extra ) } };
  std::string const header_str = header.dump();
  u64 const header_len = header_str.size();
  out.write( reinterpret_cast<char const*>( &header_len ), 8 );
  out.write( header_str.data(), header_len );

  for ( auto const& layer : net.layers() )
  {
    std::vector<float> logits( layer.gate_logits.data(),
                               layer.gate_logits.data() + layer.gate_logits.size() );
    detail::write_array( out, logits );
    detail::write_array( out, layer.conn.candidates );
    detail::write_array( out, layer.conn.logits );
  }
  if ( !out )
    throw io_error( "checkpoint: write failed for " + path );
}

struct checkpoint
{
  logic_network<float> net;
  json extra;
};

inline checkpoint load_checkpoint( std::string const& path )
{
  std::ifstream in( path, std::ios::binary );
  if ( !in )
    throw io_error( "checkpoint: cannot open " + path );
  char magic[8];
  in.read( magic, 8 );
  if ( !in || std::memcmp( magic, checkpoint_magic, 8 ) != 0 )
    throw io_error( "checkpoint: bad magic in " + path );
  u32 version = 0;
  in.read( reinterpret_cast<char*>( &version ), 4 );
  if ( version != checkpoint_version )
    throw io_error( "checkpoint: unsupported version " + std::to_string( version ) + " in " + path );
  u64 header_len = 0;
  in.read( reinterpret_cast<char*>( &header_len ), 8 );
  std::string header_str( header_len, '\0' );
  in.read( header_str.data(), header_len );
  if ( !in )
    throw io_error( "checkpoint: truncated header in " + path );
  json const header = json::parse( header_str );
  network_config<float> cfg = config_from_json( header.at( "config" ) );
  u64 const seed = header.at( "seed" ).get<u64>();

  std::vector<gate_layer<float>> layers;
  i32 in_dim = cfg.input_dim;
  for ( i32 width : cfg.layer_widths )
  {
    gate_layer<float> layer;
    auto const logits = detail::read_array<float>( in, path );
    if ( logits.size() != static_cast<std::size_t>( width ) * num_gate_ops )
      throw io_error( "checkpoint: gate logit shape mismatch in " + path );
    layer.gate_logits.resize( width, num_gate_ops );
    std::copy( logits.begin(), logits.end(), layer.gate_logits.data() );

    layer.conn.strategy = cfg.strategy;
    layer.conn.in_dim = in_dim;
    layer.conn.width = width;
    layer.conn.k = cfg.k;
    layer.conn.tau_c = cfg.tau_c;
    layer.conn.candidates = detail::read_array<i32>( in, path );
    layer.conn.logits = detail::read_array<float>( in, path );
    layers.push_back( std::move( layer ) );
    in_dim = width;
  }
  return { logic_network<float>( std::move( cfg ), seed, std::move( layers ) ),
           header.at( "extra" ) };
}

// -------------------------------------------------------------- netlist

inline json netlist_to_json( binary_circuit const& c )
{
  json layers = json::array();
  for ( auto const& layer : c.layers )
  {
    json jl = json::array();
    for ( auto const& g : layer )
      jl.push_back( json::array( { g.opcode, g.in_a, g.in_b } ) );
    layers.push_back( std::move( jl ) );
  }
  json groups = json::array();
  for ( auto const& [lo, hi] : c.groups )
    groups.push_back( json::array( { lo, hi } ) );
  return json{ { "format", netlist_format },
               { "version", netlist_version },
               { "input_dim", c.input_dim },
               { "num_classes", c.num_classes },
               { "input_encoding", c.input_encoding },
               { "layers", std::move( layers ) },
               { "groups", std::move( groups ) },
               { "metadata", c.metadata } };
}

inline binary_circuit netlist_from_json( json const& j )
{
  if ( !j.is_object() || j.value( "format", "" ) != netlist_format )
    throw io_error( "netlist: not a netlist document" );
  if ( j.at( "version" ).get<u32>() != netlist_version )
    throw io_error( "netlist: unsupported version" );
  binary_circuit c;
  c.input_dim = j.at( "input_dim" ).get<i32>();
  c.num_classes = j.at( "num_classes" ).get<i32>();
  c.input_encoding = j.at( "input_encoding" ).get<std::string>();
  for ( auto const& jl : j.at( "layers" ) )
  {
    std::vector<gate_record> layer;
    for ( auto const& jg : jl )
    {
      if ( !jg.is_array() || jg.size() != 3 )
        throw io_error( "netlist: gate records must be [opcode, in_a, in_b]" );
      layer.push_back( { jg[0].get<u8>(), jg[1].get<i32>(), jg[2].get<i32>() } );
    }
    c.layers.push_back( std::move( layer ) );
  }
  for ( auto const& jg : j.at( "groups" ) )
    c.groups.emplace_back( jg[0].get<i32>(), jg[1].get<i32>() );
  if ( j.contains( "metadata" ) )
    c.metadata = j.at( "metadata" ).get<std::map<std::string, std::string>>();
  validate( c );
  return c;
}

inline void save_netlist( std::string const& path, binary_circuit const& c )
{
  std::ofstream out( path );
  if ( !out )
    throw io_error( "netlist: cannot create " + path );
  out << netlist_to_json( c ).dump( 1 ) << "\n";
}

inline binary_circuit load_netlist( std::string const& path )
{
  std::ifstream in( path );
  if ( !in )
    throw io_error( "netlist: cannot open " + path );
  json j;
  try
  {
    in >> j;
  }
  catch ( json::parse_error const& e )
  {
    throw io_error( "netlist: parse error in " + path + ": " + e.what() );
  }
  return netlist_from_json( j );
}

// --------------------------------------------------------------- report

inline json report_to_json( train_report const& report )
{
  json epochs = json::array();
  for ( auto const& e : report.epochs )
    epochs.push_back( { { "epoch", e.epoch }, { "loss", e.loss }, { "val_acc", e.val_acc } } );
  return json{ { "epochs", std::move( epochs ) },
               { "minutes", report.minutes },
               { "binarized_test_acc", report.binarized_test_acc },
               { "seed", report.seed } };
}

} // namespace lgn
