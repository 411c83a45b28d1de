/*!
  \file common.hpp
  \brief Error types and small shared helpers.
*/

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lgn
{

/*! Base class for all library errors. */
class error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/*! A precondition on arguments or parameters was violated. */
class invalid_argument : public error
{
public:
  using error::error;
};

/*! File could not be read, written, or parsed. */
class io_error : public error
{
public:
  using error::error;
};

inline void require( bool cond, std::string const& msg )
{
  if ( !cond )
    throw invalid_argument( msg );
}

using u8 = std::uint8_t;
using u32 = std::uint32_t;
using i32 = std::int32_t;
using u64 = std::uint64_t;

} // namespace lgn
