// SPDX-License-Identifier: Apache-2.0
//
// errors.hpp

#pragma once

#include <stdexcept>
#include <string>

namespace batsonar
{
    // Base of everything the library throws on purpose.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Caller handed us something outside an operation's contract.
    class PreconditionError : public Error
    {
    public:
        using Error::Error;
    };

    // Inputs were valid but the numerics could not produce an answer.
    class NumericError : public Error
    {
    public:
        using Error::Error;
    };

    class SamplingGuardError : public NumericError
    {
    public:
        using NumericError::NumericError;
    };

    class NoSideLobeError : public NumericError
    {
    public:
        using NumericError::NumericError;
    };

    class NoSignalError : public NumericError
    {
    public:
        using NumericError::NumericError;
    };

    class DivergenceError : public NumericError
    {
    public:
        DivergenceError(int epoch, const std::string &what)
            : NumericError(what), epoch_(epoch) {}

        int epoch() const noexcept { return epoch_; }

    private:
        int epoch_;
    };
}
