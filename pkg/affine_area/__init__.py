# Orlicz and L_p affine/geominimal surface areas of convex, log-concave and s-concave functions
