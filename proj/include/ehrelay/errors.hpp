#ifndef EHRELAY_ERRORS_HPP_INCLUDED
#define EHRELAY_ERRORS_HPP_INCLUDED

#include <stdexcept>
#include <string>

namespace ehrelay
{
    /// A configuration value is missing, unknown or out of range. `key()`
    /// names the offending parameter as spelled on the command line.
    class ConfigError : public std::invalid_argument
    {
    public:
        ConfigError(std::string key, const std::string& message)
        : std::invalid_argument(message), key_(std::move(key))
        {}

        const std::string& key() const noexcept { return key_; }

    private:
        std::string key_;
    };

    /// An internal invariant was broken (programming error).
    class ContractViolation : public std::logic_error
    {
    public:
        using std::logic_error::logic_error;
    };

    inline void expects(bool condition, const char* what)
    {
        if (!condition)
            throw ContractViolation(what);
    }
} // namespace ehrelay

#endif // EHRELAY_ERRORS_HPP_INCLUDED
