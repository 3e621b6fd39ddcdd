// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace refqsr {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand shapes or lengths do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Shapes agree but the requested geometry is impossible (e.g. a
// convolution whose output would be empty).
class GeometryError : public Error {
public:
    using Error::Error;
};

// Invalid quantization parameters or bit policy.
class PolicyError : public Error {
public:
    using Error::Error;
};

// An operation that requires a nonzero norm received a zero tensor.
class NormError : public Error {
public:
    using Error::Error;
};

// Weight manifest / blob loading failure.
class LoadError : public Error {
public:
    using Error::Error;
};

// Malformed input file (PPM, config, ...).
class ParseError : public Error {
public:
    using Error::Error;
};

// A forward pass was asked to run against an inconsistent InferencePlan
// (e.g. a query patch whose reference snapshot was never produced).
class PlanError : public Error {
public:
    using Error::Error;
};

// Training-pair sampling could not satisfy the similarity constraint.
class SamplingError : public Error {
public:
    using Error::Error;
};

} // namespace refqsr
