#include <math.h>
#include <stdio.h>
#include <string.h>

#include "carnot.h"

#define CHECK(cond)                                                \
  do {                                                             \
    if (!(cond)) {                                                 \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,       \
              carnot_last_error());                                \
      return 1;                                                    \
    }                                                              \
  } while (0)

int main(void) {
  CarnotAlgebra *alg = NULL;
  CHECK(carnot_algebra_new_preset("heisenberg-1", &alg) == CARNOT_STATUS_OK);
  CHECK(carnot_algebra_dim(alg) == 3);
  CHECK(carnot_algebra_homogeneous_dimension(alg) == 4);

  double p[3] = {1.0, 0.0, 0.0}, q[3] = {0.0, 1.0, 0.0}, r[3];
  CHECK(carnot_group_mul(alg, p, q, r, 3) == CARNOT_STATUS_OK);
  CHECK(fabs(r[2] - 0.5) < 1e-15);
  CHECK(carnot_dilate(alg, -1.0, p, r, 3) == CARNOT_STATUS_NON_POSITIVE_SCALE);
  CHECK(strlen(carnot_last_error()) > 0);

  double g = 0.0;
  CHECK(carnot_gauge(alg, p, 2, &g) == CARNOT_STATUS_DIMENSION_MISMATCH);
  CHECK(carnot_gauge(alg, p, 3, &g) == CARNOT_STATUS_OK);
  CHECK(fabs(g - 1.0) < 1e-15);
  carnot_algebra_free(alg);

  CHECK(carnot_algebra_new_preset("nope", &alg) == CARNOT_STATUS_INVALID_CONFIG);
  printf("ok %s\n", carnot_version());
  return 0;
}
