#pragma once
#include <safegrid/certify.hpp>
#include <safegrid/dataset.hpp>
#include <safegrid/errors.hpp>
#include <safegrid/model.hpp>
#include <safegrid/numeric.hpp>
#include <safegrid/path.hpp>
#include <safegrid/report.hpp>
#include <safegrid/solve.hpp>
#include <safegrid/validate.hpp>
