/*!
  \file arch.hpp
  \brief Architecture-string grammar: `<layers><F|L|Top<K>>-<width>[K]`.

  "2Top32-16K" is two Top-32 layers of 16,000 gates each; "1L-2K" is one
  dense-learnable layer of 2,000 gates; "3F-8K" is three fixed-random layers
  of 8,000.  Width without the K suffix is taken literally ("1Top8-256").
*/

#pragma once

#include <cctype>
#include <string>

#include "common.hpp"
#include "connectome.hpp"

namespace lgn
{

struct arch_spec
{
  i32 layers = 1;
  wiring strategy = wiring::fixed;
  i32 k = 0; // top_k only
  i32 width = 0;

  bool operator==( arch_spec const& ) const = default;
};

inline arch_spec parse_arch( std::string const& s )
{
  auto fail = [&]() -> arch_spec {
    throw invalid_argument( "bad architecture string '" + s +
                            "' (expected <layers><F|L|Top<K>>-<width>[K], e.g. 2Top32-16K)" );
  };
  std::size_t i = 0;
  auto read_int = [&]() -> i32 {
    std::size_t const start = i;
    while ( i < s.size() && std::isdigit( static_cast<unsigned char>( s[i] ) ) )
      ++i;
    if ( i == start || i - start > 9 )
      fail();
    return std::stoi( s.substr( start, i - start ) );
  };

  arch_spec a;
  a.layers = read_int();
  if ( i >= s.size() )
    fail();
  if ( s[i] == 'F' )
  {
    a.strategy = wiring::fixed;
    ++i;
  }
  else if ( s[i] == 'L' )
  {
    a.strategy = wiring::learnable;
    ++i;
  }
  else if ( s.compare( i, 3, "Top" ) == 0 )
  {
    a.strategy = wiring::top_k;
    i += 3;
    a.k = read_int();
  }
  else
  {
    fail();
  }
  if ( i >= s.size() || s[i] != '-' )
    fail();
  ++i;
  a.width = read_int();
  if ( i < s.size() && s[i] == 'K' )
  {
    a.width *= 1000;
    ++i;
  }
  if ( i != s.size() )
    fail();
  if ( a.layers < 1 || a.width < 1 )
    fail();
  return a;
}

inline std::string print_arch( arch_spec const& a )
{
  std::string s = std::to_string( a.layers );
  switch ( a.strategy )
  {
  case wiring::fixed:
    s += 'F';
    break;
  case wiring::learnable:
    s += 'L';
    break;
  case wiring::top_k:
    s += "Top" + std::to_string( a.k );
    break;
  }
  s += '-';
  if ( a.width % 1000 == 0 )
    s += std::to_string( a.width / 1000 ) + "K";
  else
    s += std::to_string( a.width );
  return s;
}

} // namespace lgn
