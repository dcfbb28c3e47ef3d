#pragma once

// Umbrella header for the simulation library (the CLI lives in cli.hpp).

#include <mrxsim/errors.hpp>
#include <mrxsim/fields.hpp>
#include <mrxsim/fingerprint.hpp>
#include <mrxsim/io_dataset.hpp>
#include <mrxsim/io_native.hpp>
#include <mrxsim/io_raw.hpp>
#include <mrxsim/measurement.hpp>
#include <mrxsim/model.hpp>
#include <mrxsim/phantom.hpp>
#include <mrxsim/presets.hpp>
#include <mrxsim/relaxation.hpp>
