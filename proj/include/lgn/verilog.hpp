/*!
  \file verilog.hpp
  \brief Synthesizable combinational Verilog from a hardened circuit.

  One continuous assignment per gate.  The class vote either stays host-side
  (outputs are the last layer's wires) or is emitted as per-class popcount
  adders plus an argmax comparator chain, selected by `emit_popcount`.
*/

#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include "circuit.hpp"
#include "common.hpp"

namespace lgn
{

struct verilog_options
{
  std::string module_name = "lgn_circuit";
  bool emit_popcount = false;
};

namespace detail
{

inline std::string gate_expr( u8 op, std::string const& a, std::string const& b )
{
  switch ( op )
  {
  case 0:
    return "1'b0";
  case 1:
    return a + " & " + b;
  case 2:
    return a + " & ~" + b;
  case 3:
    return a;
  case 4:
    return "~" + a + " & " + b;
  case 5:
    return b;
  case 6:
    return a + " ^ " + b;
  case 7:
    return a + " | " + b;
  case 8:
    return "~(" + a + " | " + b + ")";
  case 9:
    return "~(" + a + " ^ " + b + ")";
  case 10:
    return "~" + b;
  case 11:
    return a + " | ~" + b;
  case 12:
    return "~" + a;
  case 13:
    return "~" + a + " | " + b;
  default:
    return op == 14 ? "~(" + a + " & " + b + ")" : "1'b1";
  }
}

inline int bits_for( i32 max_value )
{
  int bits = 1;
  while ( ( i32( 1 ) << bits ) <= max_value )
    ++bits;
  return bits;
}

} // namespace detail

inline std::string emit_verilog( binary_circuit const& c, verilog_options const& opts = {} )
{
  validate( c );
  std::ostringstream out;
  i32 const last_width = static_cast<i32>( c.layers.back().size() );

  out << "// combinational logic gate network: " << c.total_gates() << " gates, "
      << c.layers.size() << " layers, input encoding " << c.input_encoding << "\n";
  out << "module " << opts.module_name << " (\n";
  out << "  input  wire [" << c.input_dim - 1 << ":0] x";
  if ( opts.emit_popcount )
  {
    int const count_bits = detail::bits_for( last_width / c.num_classes );
    int const class_bits = detail::bits_for( c.num_classes - 1 );
    for ( i32 cl = 0; cl < c.num_classes; ++cl )
      out << ",\n  output wire [" << count_bits - 1 << ":0] count_" << cl;
    out << ",\n  output wire [" << class_bits - 1 << ":0] predicted";
  }
  else
  {
    out << ",\n  output wire [" << last_width - 1 << ":0] y";
  }
  out << "\n);\n\n";

  auto wire_ref = [&]( std::size_t layer, i32 idx ) {
    if ( layer == 0 )
      return "x[" + std::to_string( idx ) + "]";
    return "w" + std::to_string( layer - 1 ) + "_" + std::to_string( idx );
  };

  for ( std::size_t l = 0; l < c.layers.size(); ++l )
  {
    out << "  // layer " << l << "\n";
    for ( std::size_t g = 0; g < c.layers[l].size(); ++g )
    {
      auto const& rec = c.layers[l][g];
      std::string const name = "w" + std::to_string( l ) + "_" + std::to_string( g );
      out << "  wire " << name << ";\n";
      out << "  assign " << name << " = "
          << detail::gate_expr( rec.opcode, wire_ref( l, rec.in_a ), wire_ref( l, rec.in_b ) )
          << ";\n";
    }
  }
  out << "\n";

  std::size_t const last = c.layers.size() - 1;
  if ( opts.emit_popcount )
  {
    int const count_bits = detail::bits_for( last_width / c.num_classes );
    for ( i32 cl = 0; cl < c.num_classes; ++cl )
    {
      out << "  assign count_" << cl << " = ";
      for ( i32 g = c.groups[cl].first; g < c.groups[cl].second; ++g )
      {
        if ( g != c.groups[cl].first )
          out << " + ";
        out << "w" << last << "_" << g;
      }
      out << ";\n";
    }
    // argmax chain; strict > keeps ties on the lowest class
    int const class_bits = detail::bits_for( c.num_classes - 1 );
    out << "\n  wire [" << count_bits - 1 << ":0] best_0;\n";
    out << "  wire [" << class_bits - 1 << ":0] idx_0;\n";
    out << "  assign best_0 = count_0;\n";
    out << "  assign idx_0 = " << class_bits << "'d0;\n";
    for ( i32 cl = 1; cl < c.num_classes; ++cl )
    {
      out << "  wire [" << count_bits - 1 << ":0] best_" << cl << ";\n";
      out << "  wire [" << class_bits - 1 << ":0] idx_" << cl << ";\n";
      out << "  assign best_" << cl << " = (count_" << cl << " > best_" << cl - 1 << ") ? count_"
          << cl << " : best_" << cl - 1 << ";\n";
      out << "  assign idx_" << cl << " = (count_" << cl << " > best_" << cl - 1 << ") ? "
          << class_bits << "'d" << cl << " : idx_" << cl - 1 << ";\n";
    }
    out << "  assign predicted = idx_" << c.num_classes - 1 << ";\n";
  }
  else
  {
    for ( i32 g = 0; g < last_width; ++g )
      out << "  assign y[" << g << "] = w" << last << "_" << g << ";\n";
  }

  out << "\nendmodule\n";
  return out.str();
}

} // namespace lgn
