# maxmix 📈, AGPL-3.0 license
