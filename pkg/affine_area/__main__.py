import sys

from affine_area.main import main

sys.exit(main())
