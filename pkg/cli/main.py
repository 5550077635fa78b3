import sys
from collections.abc import Sequence

from cli.app import CommandApp
from assaybounds import __version__
from commands.config import load_experiment

# Command routers
from commands.bounds import router as bounds_router
from commands.confusion import router as confusion_router
from commands.multiclass import router as multiclass_router
from commands.noise import router as noise_router
from commands.simulate import router as simulate_router
from commands.waterlevel import router as waterlevel_router

app = CommandApp(
    prog="assaybounds",
    description="Uniform uncertainty bounds for classification and prevalence estimation.",
    version=__version__,
    loader=load_experiment,
)

app.include_router(confusion_router)
app.include_router(bounds_router)
app.include_router(waterlevel_router)
app.include_router(simulate_router)
app.include_router(noise_router)
app.include_router(multiclass_router)


def run(argv: Sequence[str] | None = None) -> int:
    return app.run(argv)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
