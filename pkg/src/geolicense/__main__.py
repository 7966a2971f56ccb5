import sys

from geolicense.cli import main

sys.exit(main())
