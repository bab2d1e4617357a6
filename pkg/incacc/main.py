import logging

from dotenv import load_dotenv

from .cli import cli
from .config import get_settings

load_dotenv()


def main():
    settings = get_settings()
    logging.basicConfig(
        level=settings.log_level,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )
    cli(prog_name="incacc")


if __name__ == "__main__":
    main()
