#pragma once

// Core library without image file I/O (see io.hpp, which needs OpenCV).

#include "patchstyle/cluster_tree.hpp"
#include "patchstyle/denoise.hpp"
#include "patchstyle/error.hpp"
#include "patchstyle/image.hpp"
#include "patchstyle/palette.hpp"
#include "patchstyle/patch.hpp"
#include "patchstyle/patch_database.hpp"
#include "patchstyle/patch_index.hpp"
#include "patchstyle/pyramid.hpp"
#include "patchstyle/segmentation.hpp"
#include "patchstyle/synthesis.hpp"
