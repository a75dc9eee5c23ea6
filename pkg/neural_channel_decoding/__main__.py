import sys

from neural_channel_decoding.cli import main

sys.exit(main())
