// Copyright Contributors to the ssimx Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssimx {

/// Base class for all ssimx exceptions.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened or read/written.
class io_error : public error {
public:
  using error::error;
};

/// File exists but its contents are not a supported format.
class format_error : public error {
public:
  using error::error;
};

/// Shape mismatch between operands, or a window larger than the image.
class dimension_error : public error {
public:
  using error::error;
};

/// Invalid argument value (bad enum, non-odd window, empty grid, ...).
class argument_error : public error {
public:
  using error::error;
};

/// Non-finite value encountered where a finite one is required.
class numeric_error : public error {
public:
  using error::error;
};

/// Input is structurally valid but carries no usable data (empty valid set).
class degenerate_input_error : public error {
public:
  using error::error;
};

/// Optimization produced a non-finite loss; carries the iteration index.
class divergence_error : public error {
public:
  divergence_error(std::size_t iteration, const std::string& what)
      : error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  std::size_t iteration() const { return iteration_; }

private:
  std::size_t iteration_;
};

}  // namespace ssimx
