from spincauchy.cli import main

raise SystemExit(main())
